// chainmmi/testing.hpp

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

#ifndef CHAINMMI_TESTING_HPP_
#define CHAINMMI_TESTING_HPP_

// Seeded random instances and the gradient check used by the test suites
// and the `gradcheck` subcommand.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "chainmmi/batching.hpp"
#include "chainmmi/graph.hpp"
#include "chainmmi/loss.hpp"
#include "chainmmi/oracle.hpp"

namespace chainmmi {

using Rng = std::mt19937_64;

/// Small random graph.  A random spanning tree rooted at the initial state
/// makes every state accessible; all tree leaves are final, so every state
/// is co-accessible.  Remaining arcs (up to max_transitions) are uniform.
inline ChainGraph RandomGraph(Rng &rng, StateId max_states,
                              std::uint32_t max_transitions, PdfId num_pdfs) {
  std::uniform_int_distribution<StateId> n_states(1, max_states);
  const StateId ns = n_states(rng);
  std::uniform_real_distribution<double> prob(0.05, 1.0);
  std::uniform_int_distribution<PdfId> pdf(0, num_pdfs - 1);
  std::uniform_int_distribution<StateId> state(0, ns - 1);

  std::vector<Transition> arcs;
  std::vector<char> has_child(ns, 0);
  for (StateId s = 1; s < ns; ++s) {
    const StateId parent = std::uniform_int_distribution<StateId>(0, s - 1)(rng);
    has_child[parent] = 1;
    arcs.push_back({parent, s, pdf(rng), prob(rng)});
  }
  const std::uint32_t total = std::max<std::uint32_t>(
      static_cast<std::uint32_t>(arcs.size()),
      std::uniform_int_distribution<std::uint32_t>(ns, std::max(ns, max_transitions))(rng));
  while (arcs.size() < total) arcs.push_back({state(rng), state(rng), pdf(rng), prob(rng)});

  std::vector<double> finals(ns, 0.0);
  std::bernoulli_distribution extra_final(0.3);
  for (StateId s = 0; s < ns; ++s)
    if (!has_child[s] || extra_final(rng)) finals[s] = prob(rng);
  return ChainGraph::Build(std::move(arcs), ns, num_pdfs, 0, std::move(finals));
}

/// True if some accepting path has exactly num_frames arcs.
inline bool AcceptsLength(const ChainGraph &graph, std::size_t num_frames) {
  std::vector<char> cur(graph.NumStates(), 0), next;
  cur[graph.InitialState()] = 1;
  for (std::size_t t = 0; t < num_frames; ++t) {
    next.assign(graph.NumStates(), 0);
    for (const Transition &arc : graph.ForwardTransitions())
      if (cur[arc.from_state]) next[arc.to_state] = 1;
    cur.swap(next);
  }
  for (StateId s = 0; s < graph.NumStates(); ++s)
    if (cur[s] && graph.FinalProbs()[s] > 0.0) return true;
  return false;
}

inline Matrix RandomLogLikes(Rng &rng, std::size_t frames, std::size_t pdfs,
                             double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(frames, pdfs);
  for (double &v : m.data) v = normal(rng);
  return m;
}

/// Random graph that accepts `num_frames`-long paths.
inline ChainGraph RandomAcceptingGraph(Rng &rng, StateId max_states,
                                       std::uint32_t max_transitions,
                                       PdfId num_pdfs, std::size_t num_frames) {
  for (;;) {
    ChainGraph g = RandomGraph(rng, max_states, max_transitions, num_pdfs);
    if (AcceptsLength(g, num_frames)) return g;
  }
}

/// Larger graph for throughput tests: every state has a self-loop and an
/// arc to its successor (so paths of any length exist), the remaining arcs
/// are uniform, every state is final.
inline ChainGraph RandomLargeGraph(Rng &rng, StateId num_states,
                                   std::uint32_t num_transitions, PdfId num_pdfs) {
  std::uniform_real_distribution<double> prob(0.01, 1.0);
  std::uniform_int_distribution<PdfId> pdf(0, num_pdfs - 1);
  std::uniform_int_distribution<StateId> state(0, num_states - 1);
  std::vector<Transition> arcs;
  for (StateId s = 0; s < num_states; ++s) {
    arcs.push_back({s, s, pdf(rng), prob(rng)});
    arcs.push_back({s, (s + 1) % num_states, pdf(rng), prob(rng)});
  }
  while (arcs.size() < num_transitions)
    arcs.push_back({state(rng), state(rng), pdf(rng), prob(rng)});
  std::vector<double> finals(num_states);
  for (double &f : finals) f = prob(rng);
  return ChainGraph::Build(std::move(arcs), num_states, num_pdfs, 0,
                           std::move(finals));
}

struct LossInstance {
  std::vector<Matrix> sequences;    // caller order
  std::vector<ChainGraph> numerators;  // caller order
  ChainGraph denominator;
};

/// 1..max_batch utterances of 1..max_frames frames over 2..max_pdfs pdfs,
/// with small random graphs that accept every utterance length.
inline LossInstance RandomLossInstance(Rng &rng, std::size_t max_batch = 3,
                                       std::size_t max_frames = 6,
                                       PdfId max_pdfs = 4, StateId max_states = 5,
                                       std::uint32_t max_transitions = 10) {
  const std::size_t nb = std::uniform_int_distribution<std::size_t>(1, max_batch)(rng);
  const PdfId nd = std::uniform_int_distribution<PdfId>(2, std::max<PdfId>(2, max_pdfs))(rng);
  std::uniform_int_distribution<std::size_t> len(1, max_frames);
  std::vector<std::size_t> lengths(nb);
  for (auto &l : lengths) l = len(rng);

  for (;;) {
    ChainGraph den = RandomGraph(rng, max_states, max_transitions, nd);
    if (!std::all_of(lengths.begin(), lengths.end(),
                     [&](std::size_t l) { return AcceptsLength(den, l); }))
      continue;
    LossInstance inst{{}, {}, std::move(den)};
    for (std::size_t b = 0; b < nb; ++b) {
      inst.sequences.push_back(RandomLogLikes(rng, lengths[b], nd));
      inst.numerators.push_back(
          RandomAcceptingGraph(rng, max_states, max_transitions, nd, lengths[b]));
    }
    return inst;
  }
}

/// Numerator batch in the batch's sorted order.
inline ChainGraphBatch SortedNumerators(const LossInstance &inst,
                                        const LogLikBatch &batch) {
  std::vector<ChainGraph> sorted;
  for (std::size_t k : batch.order) sorted.push_back(inst.numerators[k]);
  return BatchGraphs(std::move(sorted));
}

/// max_i |fd_i - an_i| / max(||an||_inf, ||fd||_inf, 1e-8).
inline double GradRelativeError(std::span<const double> analytic,
                                std::span<const double> numeric) {
  double diff = 0.0, scale = 1e-8;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::fabs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::fabs(analytic[i]), std::fabs(numeric[i])});
  }
  return diff / scale;
}

struct GradCheckTrial {
  std::size_t batch_size = 0;
  std::size_t num_pdfs = 0;
  std::size_t num_frames = 0;
  double objective = 0.0;
  double rel_error = 0.0;
};

/// Compares the analytic chain-loss gradient with central differences of
/// the objective over every valid log-likelihood entry.
inline GradCheckTrial GradCheckInstance(const LossInstance &inst,
                                        const FBOptions &opts, double eps = 1e-6) {
  const LogLikBatch batch = MakeBatch(inst.sequences);
  const ChainGraphBatch num = SortedNumerators(inst, batch);
  const ChainGraphBatch den = BroadcastGraph(inst.denominator, batch.batch_size);
  ThreadPool pool(1);
  const ChainLossResult res = ChainLoss(batch, num, den, opts, false, &pool);
  CHAINMMI_CHECK(res.num_failed == 0, "gradient check instance failed numerically");

  std::vector<std::size_t> cells;  // valid cells of the padded array
  for (std::size_t b = 0; b < batch.batch_size; ++b)
    for (std::size_t i = 0; i < batch.lengths[b] * batch.num_pdfs; ++i)
      cells.push_back(batch.Offset(b, 0) + i);
  std::vector<double> x, analytic;
  for (std::size_t c : cells) {
    x.push_back(batch.values[c]);
    analytic.push_back(res.grad[c]);
  }
  LogLikBatch work = batch;
  auto objective = [&](std::span<const double> v) {
    for (std::size_t i = 0; i < cells.size(); ++i) work.values[cells[i]] = v[i];
    const ChainLossResult r = ChainLoss(work, num, den, opts, false, &pool);
    return r.num_failed == 0 ? r.objective : std::nan("");
  };
  const std::vector<double> numeric = FiniteDiffGrad(objective, x, eps);

  GradCheckTrial trial;
  trial.batch_size = batch.batch_size;
  trial.num_pdfs = batch.num_pdfs;
  trial.num_frames = batch.TotalFrames();
  trial.objective = res.objective;
  trial.rel_error = GradRelativeError(analytic, numeric);
  return trial;
}

struct GradCheckReport {
  std::vector<GradCheckTrial> trials;
  double max_rel_error = 0.0;
  double tolerance = 1e-6;
  bool Passed() const { return max_rel_error < tolerance; }
};

inline GradCheckReport RunGradCheck(std::uint64_t seed, std::size_t num_trials,
                                    const FBOptions &opts, double eps = 1e-6,
                                    double tolerance = 1e-6) {
  CHAINMMI_CHECK(num_trials > 0, "gradient check needs at least one trial");
  Rng rng(seed);
  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < num_trials; ++k) {
    report.trials.push_back(GradCheckInstance(RandomLossInstance(rng), opts, eps));
    report.max_rel_error = std::max(report.max_rel_error, report.trials.back().rel_error);
  }
  return report;
}

}  // namespace chainmmi

#endif  // CHAINMMI_TESTING_HPP_
