// chainmmi/forward_backward.hpp

// Copyright 2026  The chainmmi Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CHAINMMI_FORWARD_BACKWARD_HPP_
#define CHAINMMI_FORWARD_BACKWARD_HPP_

// Batched forward-backward over sparse chain graphs, in probability space.
//
// Trellis column t (1-based) consumes log-likelihood frame t-1.  For item b
// with length T_b the forward pass computes, for t = 1..T_b,
//
//   r[s']   = sum over arcs (s -> s', d, p) of p * alpha[t-1][s] * e[t-1][d]
//   l[s']   = r[s'] + leak * pi[s'] * sum(r)          (only when leak > 0)
//   alpha[t] = l / c_t,  c_t = sum(l)
//
// with e[t][d] = exp(L[t][d] - m_t) and m_t the frame maximum.  The frame's
// log scale ln(c_t) + m_t goes to scale_logs.  Final probabilities are
// applied at the item's own last column:  z = sum_s alpha[T_b][s] * f[s]
// and log P = sum_t scale_logs[t] + ln z.
//
// The backward pass is the exact adjoint of that map, divided by the same
// per-frame scales, so that sum_s alpha[t][s] * beta[t][s] = z for every t.
// Occupation posteriors are therefore d log P / d L, including the leak.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "chainmmi/batching.hpp"
#include "chainmmi/common.hpp"
#include "chainmmi/graph.hpp"
#include "chainmmi/parallel.hpp"

namespace chainmmi {

struct FBOptions {
  /// Leaky-HMM coefficient; 0 disables leaking entirely.
  double leak_coefficient = 1e-5;
  /// Per-graph leak distribution.  Empty: uniform over each item's states.
  /// One entry: shared by every item.  Otherwise one entry per item (in
  /// batch order).
  std::vector<std::vector<double>> leak_distribution;
  /// A frame whose alpha total drops below this marks the item as failed.
  double scale_floor = 1e-300;
  /// 0 = hardware concurrency.
  std::size_t num_threads = 0;
  /// Keep alpha/beta in FBResult.
  bool keep_trellis = false;
};

struct ForwardResult {
  std::size_t batch_size = 0;
  std::size_t max_frames = 0;
  std::size_t max_states = 0;
  std::vector<double> log_probs;   // (B); -inf for failed items
  std::vector<double> alpha;       // (B, T_max + 1, S_max); rows normalized
  std::vector<double> scale_logs;  // (B, T_max)
  std::vector<double> final_sums;  // (B); z
  /// Frame at which an item failed; a value equal to the item's length means
  /// no surviving path ended in a final state.
  std::vector<std::optional<std::size_t>> failed_frame;

  std::size_t AlphaOffset(std::size_t b, std::size_t t) const {
    return (b * (max_frames + 1) + t) * max_states;
  }
};

struct FBResult {
  std::size_t batch_size = 0;
  std::size_t max_frames = 0;
  std::size_t num_pdfs = 0;
  std::vector<double> log_probs;           // (B)
  std::vector<double> backward_log_probs;  // (B), reconstructed from beta
  std::vector<double> posteriors;          // (B, T_max, D)
  std::vector<double> scale_logs;          // (B, T_max)
  std::vector<double> alpha;               // empty unless keep_trellis
  std::vector<double> beta;                // empty unless keep_trellis
  std::vector<std::optional<std::size_t>> failed_frame;

  bool Failed(std::size_t b) const { return failed_frame[b].has_value(); }
  std::span<const double> Posterior(std::size_t b, std::size_t t) const {
    return std::span<const double>(posteriors)
        .subspan((b * max_frames + t) * num_pdfs, num_pdfs);
  }
};

namespace detail {

inline void CheckInputs(const LogLikBatch &batch, const ChainGraphBatch &graphs,
                        const FBOptions &opts) {
  CHAINMMI_CHECK(graphs.BatchSize() == batch.batch_size, "graph batch has ",
                 graphs.BatchSize(), " items, log-likelihood batch has ",
                 batch.batch_size);
  CHAINMMI_CHECK(graphs.NumPdfs() == batch.num_pdfs, "graphs have ",
                 graphs.NumPdfs(), " pdfs, log-likelihoods have ",
                 batch.num_pdfs);
  CHAINMMI_CHECK(batch.values.size() ==
                     batch.batch_size * batch.max_frames * batch.num_pdfs,
                 "log-likelihood array size does not match (B, T, D)");
  CHAINMMI_CHECK(batch.lengths.size() == batch.batch_size &&
                     batch.valid_batch_sizes.size() == batch.max_frames,
                 "batch bookkeeping is inconsistent");
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    CHAINMMI_CHECK(batch.lengths[b] >= 1 && batch.lengths[b] <= batch.max_frames,
                   "item ", b, " has invalid length ", batch.lengths[b]);
    CHAINMMI_CHECK(b == 0 || batch.lengths[b] <= batch.lengths[b - 1],
                   "batch lengths must be sorted in non-increasing order");
  }
  CHAINMMI_CHECK(opts.leak_coefficient >= 0.0 &&
                     std::isfinite(opts.leak_coefficient),
                 "leak coefficient must be finite and >= 0, got ",
                 opts.leak_coefficient);
  CHAINMMI_CHECK(opts.scale_floor >= 0.0, "scale floor must be >= 0");
}

// Leak distribution of item b, resolved and validated.
inline std::vector<std::vector<double>> ResolveLeak(
    const ChainGraphBatch &graphs, const FBOptions &opts) {
  const std::size_t n = graphs.BatchSize();
  const auto &given = opts.leak_distribution;
  CHAINMMI_CHECK(given.empty() || given.size() == 1 || given.size() == n,
                 "leak distribution must have 0, 1 or ", n, " entries, got ",
                 given.size());
  std::vector<std::vector<double>> pis(n);
  for (std::size_t b = 0; b < n; ++b) {
    const StateId s = graphs.View(b).num_states;
    if (given.empty()) {
      pis[b].assign(s, 1.0 / static_cast<double>(s));
      continue;
    }
    const auto &pi = given.size() == 1 ? given[0] : given[b];
    CHAINMMI_CHECK(pi.size() == s, "leak distribution for item ", b, " has ",
                   pi.size(), " entries, graph has ", s, " states");
    double sum = 0.0;
    for (double v : pi) {
      CHAINMMI_CHECK(v >= 0.0 && std::isfinite(v),
                     "leak distribution entries must be >= 0");
      sum += v;
    }
    CHAINMMI_CHECK(std::fabs(sum - 1.0) <= 1e-12,
                   "leak distribution for item ", b, " sums to ", sum);
    pis[b] = pi;
  }
  return pis;
}

inline bool BelowFloor(double v, double floor) {
  return !(v >= floor) || v == 0.0 || !std::isfinite(v);
}

}  // namespace detail

/// Forward pass.  `pool` may be null, in which case one is created from
/// opts.num_threads.
inline ForwardResult Forward(const LogLikBatch &batch,
                             const ChainGraphBatch &graphs,
                             const FBOptions &opts, ThreadPool *pool = nullptr) {
  detail::CheckInputs(batch, graphs, opts);
  std::optional<ThreadPool> own_pool;
  if (!pool) pool = &own_pool.emplace(opts.num_threads);

  const std::size_t nb = batch.batch_size, tmax = batch.max_frames,
                    nd = batch.num_pdfs, smax = graphs.MaxStates();
  const double leak = opts.leak_coefficient;
  const auto pis = detail::ResolveLeak(graphs, opts);
  std::vector<GraphView> views;
  for (std::size_t b = 0; b < nb; ++b) views.push_back(graphs.View(b));

  ForwardResult res;
  res.batch_size = nb;
  res.max_frames = tmax;
  res.max_states = smax;
  res.log_probs.assign(nb, -std::numeric_limits<double>::infinity());
  res.alpha.assign(nb * (tmax + 1) * smax, 0.0);
  res.scale_logs.assign(nb * tmax, 0.0);
  res.final_sums.assign(nb, 0.0);
  res.failed_frame.assign(nb, std::nullopt);

  // Emission factors exp(L - frame max) for valid frames only.
  std::vector<double> emis(nb * tmax * nd, 0.0);
  std::vector<double> frame_max(nb * tmax, 0.0);
  pool->ParallelFor(nb * tmax, [&](std::size_t u) {
    const std::size_t b = u / tmax, t = u % tmax;
    if (t >= batch.lengths[b]) return;
    const auto row = batch.Frame(b, t);
    double m = -std::numeric_limits<double>::infinity();
    for (double v : row) m = std::max(m, v);
    frame_max[u] = m;
    if (!std::isfinite(m)) return;
    double *out = &emis[u * nd];
    for (std::size_t d = 0; d < nd; ++d) out[d] = std::exp(row[d] - m);
  });

  for (std::size_t b = 0; b < nb; ++b)
    res.alpha[res.AlphaOffset(b, 0) + views[b].initial_state] = 1.0;

  for (std::size_t t = 1; t <= tmax; ++t) {
    const std::size_t bs = batch.valid_batch_sizes[t - 1];
    // Each unit owns alpha[b][t][s]; arcs are read in backward-layout order.
    pool->ParallelFor(bs * smax, [&](std::size_t u) {
      const std::size_t b = u / smax, s = u % smax;
      const GraphView &g = views[b];
      if (res.failed_frame[b] || s >= g.num_states) return;
      const double *prev = &res.alpha[res.AlphaOffset(b, t - 1)];
      const double *e = &emis[(b * tmax + t - 1) * nd];
      const std::uint32_t begin = g.backward_index[2 * s],
                          end = g.backward_index[2 * s + 1];
      double acc = 0.0;
      for (std::uint32_t i = begin; i < end; ++i) {
        const std::uint32_t *tr = &g.backward_transitions[3 * i];
        acc += g.backward_probs[i] * prev[tr[0]] * e[tr[2]];
      }
      res.alpha[res.AlphaOffset(b, t) + s] = acc;
    });
    pool->ParallelFor(bs, [&](std::size_t b) {
      if (res.failed_frame[b]) return;
      const GraphView &g = views[b];
      double *row = &res.alpha[res.AlphaOffset(b, t)];
      const double m = frame_max[b * tmax + t - 1];
      double tot = 0.0;
      for (StateId s = 0; s < g.num_states; ++s) tot += row[s];
      if (!std::isfinite(m) || detail::BelowFloor(tot, opts.scale_floor)) {
        res.failed_frame[b] = t - 1;
        std::fill(row, row + smax, 0.0);
        return;
      }
      double c = tot;
      if (leak > 0.0) {
        const double extra = leak * tot;
        const auto &pi = pis[b];
        for (StateId s = 0; s < g.num_states; ++s) row[s] += extra * pi[s];
        c = tot + extra;
      }
      for (StateId s = 0; s < g.num_states; ++s) row[s] /= c;
      res.scale_logs[b * tmax + t - 1] = std::log(c) + m;

      if (t == batch.lengths[b]) {
        double z = 0.0;
        for (StateId s = 0; s < g.num_states; ++s) z += row[s] * g.final_probs[s];
        if (detail::BelowFloor(z, opts.scale_floor)) {
          res.failed_frame[b] = t;
          return;
        }
        double lp = 0.0;
        for (std::size_t k = 0; k < t; ++k) lp += res.scale_logs[b * tmax + k];
        res.final_sums[b] = z;
        res.log_probs[b] = lp + std::log(z);
      }
    });
  }

  // Failed items keep no partial trellis.
  for (std::size_t b = 0; b < nb; ++b) {
    if (!res.failed_frame[b]) continue;
    std::fill_n(res.alpha.begin() + static_cast<std::ptrdiff_t>(res.AlphaOffset(b, 0)),
                (tmax + 1) * smax, 0.0);
    std::fill_n(res.scale_logs.begin() + static_cast<std::ptrdiff_t>(b * tmax),
                tmax, 0.0);
    res.log_probs[b] = -std::numeric_limits<double>::infinity();
  }
  return res;
}

namespace detail {

// exp(L[b][t][d] - scale_logs[b][t]) for valid frames of non-failed items.
inline std::vector<double> ScaledEmissions(const LogLikBatch &batch,
                                           const ForwardResult &fwd,
                                           ThreadPool &pool) {
  const std::size_t tmax = batch.max_frames, nd = batch.num_pdfs;
  std::vector<double> w(batch.batch_size * tmax * nd, 0.0);
  pool.ParallelFor(batch.batch_size * tmax, [&](std::size_t u) {
    const std::size_t b = u / tmax, t = u % tmax;
    if (fwd.failed_frame[b] || t >= batch.lengths[b]) return;
    const auto row = batch.Frame(b, t);
    const double sl = fwd.scale_logs[u];
    for (std::size_t d = 0; d < nd; ++d) w[u * nd + d] = std::exp(row[d] - sl);
  });
  return w;
}

// <pi, beta_row>, the leak-adjoint correction for one trellis column.
inline double LeakDot(std::span<const double> pi, const double *beta_row) {
  double acc = 0.0;
  for (std::size_t s = 0; s < pi.size(); ++s) acc += pi[s] * beta_row[s];
  return acc;
}

}  // namespace detail

/// Backward pass; returns beta as (B, T_max + 1, S_max), zero on padded
/// columns and failed items.  If `backward_log_probs` is non-null it
/// receives ln(beta[b][0][init]) + sum of scale logs for each item.
inline std::vector<double> Backward(const LogLikBatch &batch,
                                    const ChainGraphBatch &graphs,
                                    const FBOptions &opts,
                                    const ForwardResult &fwd,
                                    std::vector<double> *backward_log_probs =
                                        nullptr,
                                    ThreadPool *pool = nullptr) {
  detail::CheckInputs(batch, graphs, opts);
  CHAINMMI_CHECK(fwd.batch_size == batch.batch_size &&
                     fwd.max_frames == batch.max_frames &&
                     fwd.max_states == graphs.MaxStates(),
                 "forward result does not match the batch");
  std::optional<ThreadPool> own_pool;
  if (!pool) pool = &own_pool.emplace(opts.num_threads);

  const std::size_t nb = batch.batch_size, tmax = batch.max_frames,
                    nd = batch.num_pdfs, smax = graphs.MaxStates();
  const double leak = opts.leak_coefficient;
  const auto pis = detail::ResolveLeak(graphs, opts);
  std::vector<GraphView> views;
  for (std::size_t b = 0; b < nb; ++b) views.push_back(graphs.View(b));
  const std::vector<double> w = detail::ScaledEmissions(batch, fwd, *pool);

  std::vector<double> beta(nb * (tmax + 1) * smax, 0.0);
  auto offset = [&](std::size_t b, std::size_t t) {
    return (b * (tmax + 1) + t) * smax;
  };
  std::vector<double> leak_dot(nb, 0.0);

  for (std::size_t t = tmax; t >= 1; --t) {
    const std::size_t bs = batch.valid_batch_sizes[t - 1];
    pool->ParallelFor(bs, [&](std::size_t b) {
      if (fwd.failed_frame[b]) return;
      const GraphView &g = views[b];
      if (t == batch.lengths[b])
        std::copy_n(g.final_probs.begin(), g.num_states, &beta[offset(b, t)]);
      leak_dot[b] = leak > 0.0 ? leak * detail::LeakDot(pis[b], &beta[offset(b, t)])
                               : 0.0;
    });
    // Each unit owns beta[b][t-1][s]; arcs are read in forward-layout order.
    pool->ParallelFor(bs * smax, [&](std::size_t u) {
      const std::size_t b = u / smax, s = u % smax;
      const GraphView &g = views[b];
      if (fwd.failed_frame[b] || s >= g.num_states) return;
      const double *next = &beta[offset(b, t)];
      const double *e = &w[(b * tmax + t - 1) * nd];
      const double extra = leak_dot[b];
      const std::uint32_t begin = g.forward_index[2 * s],
                          end = g.forward_index[2 * s + 1];
      double acc = 0.0;
      for (std::uint32_t i = begin; i < end; ++i) {
        const std::uint32_t *tr = &g.forward_transitions[3 * i];
        acc += g.forward_probs[i] * e[tr[2]] * (next[tr[1]] + extra);
      }
      beta[offset(b, t - 1) + s] = acc;
    });
  }

  if (backward_log_probs) {
    backward_log_probs->assign(nb, -std::numeric_limits<double>::infinity());
    for (std::size_t b = 0; b < nb; ++b) {
      if (fwd.failed_frame[b]) continue;
      double lp = 0.0;
      for (std::size_t k = 0; k < batch.lengths[b]; ++k)
        lp += fwd.scale_logs[b * tmax + k];
      (*backward_log_probs)[b] =
          lp + std::log(beta[offset(b, 0) + views[b].initial_state]);
    }
  }
  return beta;
}

/// Occupation posteriors gamma[b][t][d] = d log P_b / d L[b][t][d], as a
/// (B, T_max, D) array.  Every valid frame of a successful item sums to 1;
/// padded frames and failed items are zero.
inline std::vector<double> OccupationPosteriors(
    const LogLikBatch &batch, const ChainGraphBatch &graphs,
    const FBOptions &opts, const ForwardResult &fwd,
    std::span<const double> beta, ThreadPool *pool = nullptr) {
  detail::CheckInputs(batch, graphs, opts);
  const std::size_t nb = batch.batch_size, tmax = batch.max_frames,
                    nd = batch.num_pdfs, smax = graphs.MaxStates();
  CHAINMMI_CHECK(beta.size() == nb * (tmax + 1) * smax &&
                     fwd.alpha.size() == beta.size(),
                 "trellis sizes do not match the batch");
  std::optional<ThreadPool> own_pool;
  if (!pool) pool = &own_pool.emplace(opts.num_threads);

  const double leak = opts.leak_coefficient;
  const auto pis = detail::ResolveLeak(graphs, opts);
  std::vector<GraphView> views;
  for (std::size_t b = 0; b < nb; ++b) views.push_back(graphs.View(b));
  const std::vector<double> w = detail::ScaledEmissions(batch, fwd, *pool);

  std::vector<double> gamma(nb * tmax * nd, 0.0);
  pool->ParallelFor(nb * tmax, [&](std::size_t u) {
    const std::size_t b = u / tmax, t = u % tmax;
    if (fwd.failed_frame[b] || t >= batch.lengths[b]) return;
    const GraphView &g = views[b];
    const double *a = &fwd.alpha[fwd.AlphaOffset(b, t)];
    const double *next = &beta[fwd.AlphaOffset(b, t + 1)];
    const double *e = &w[u * nd];
    const double extra = leak > 0.0 ? leak * detail::LeakDot(pis[b], next) : 0.0;
    const double inv_z = 1.0 / fwd.final_sums[b];
    double *out = &gamma[u * nd];
    for (std::uint32_t i = 0; i < g.num_transitions; ++i) {
      const std::uint32_t *tr = &g.forward_transitions[3 * i];
      out[tr[2]] += a[tr[0]] * g.forward_probs[i] * e[tr[2]] * (next[tr[1]] + extra);
    }
    for (std::size_t d = 0; d < nd; ++d) out[d] *= inv_z;
  });
  return gamma;
}

/// Forward, backward and posteriors with one shared thread pool.
inline FBResult ForwardBackward(const LogLikBatch &batch,
                                const ChainGraphBatch &graphs,
                                const FBOptions &opts,
                                ThreadPool *pool = nullptr) {
  std::optional<ThreadPool> own_pool;
  if (!pool) pool = &own_pool.emplace(opts.num_threads);
  ForwardResult fwd = Forward(batch, graphs, opts, pool);
  FBResult res;
  std::vector<double> beta =
      Backward(batch, graphs, opts, fwd, &res.backward_log_probs, pool);
  res.posteriors = OccupationPosteriors(batch, graphs, opts, fwd, beta, pool);
  res.batch_size = batch.batch_size;
  res.max_frames = batch.max_frames;
  res.num_pdfs = batch.num_pdfs;
  res.log_probs = std::move(fwd.log_probs);
  res.scale_logs = std::move(fwd.scale_logs);
  res.failed_frame = std::move(fwd.failed_frame);
  if (opts.keep_trellis) {
    res.alpha = std::move(fwd.alpha);
    res.beta = std::move(beta);
  }
  return res;
}

}  // namespace chainmmi

#endif  // CHAINMMI_FORWARD_BACKWARD_HPP_
