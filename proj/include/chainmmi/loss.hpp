// chainmmi/loss.hpp

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

#ifndef CHAINMMI_LOSS_HPP_
#define CHAINMMI_LOSS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "chainmmi/batching.hpp"
#include "chainmmi/common.hpp"
#include "chainmmi/forward_backward.hpp"
#include "chainmmi/graph.hpp"
#include "chainmmi/parallel.hpp"

namespace chainmmi {

/// All per-item arrays are in batch (sorted) order; use Unsort() with the
/// batch's order map to get caller order.
struct ChainLossResult {
  std::size_t batch_size = 0;
  std::size_t max_frames = 0;
  std::size_t num_pdfs = 0;
  /// Sum over successful items of num_log_prob - den_log_prob.
  double objective = 0.0;
  /// -objective, divided by num_frames when frame normalization is on.
  double loss = 0.0;
  /// d objective / d L, (B, T_max, D).  Zero on padded frames and on
  /// failed items.
  std::vector<double> grad;
  std::vector<double> num_log_probs;
  std::vector<double> den_log_probs;
  std::vector<bool> failed;
  std::size_t num_failed = 0;
  /// Valid frames of the successful items.
  std::size_t num_frames = 0;
  std::vector<std::string> warnings;
};

inline ChainLossResult ChainLoss(const LogLikBatch &batch,
                                 const ChainGraphBatch &numerators,
                                 const ChainGraphBatch &denominator,
                                 const FBOptions &opts,
                                 bool normalize_by_frames = true,
                                 ThreadPool *pool = nullptr) {
  CHAINMMI_CHECK(numerators.BatchSize() == batch.batch_size,
                 "numerator batch has ", numerators.BatchSize(),
                 " graphs for ", batch.batch_size, " sequences");
  CHAINMMI_CHECK(denominator.BatchSize() == batch.batch_size,
                 "denominator batch has ", denominator.BatchSize(),
                 " graphs for ", batch.batch_size, " sequences");
  std::optional<ThreadPool> own_pool;
  if (!pool) pool = &own_pool.emplace(opts.num_threads);

  FBOptions fb_opts = opts;
  fb_opts.keep_trellis = false;
  const FBResult num = ForwardBackward(batch, numerators, fb_opts, pool);
  const FBResult den = ForwardBackward(batch, denominator, fb_opts, pool);

  const std::size_t nb = batch.batch_size, tmax = batch.max_frames,
                    nd = batch.num_pdfs;
  ChainLossResult res;
  res.batch_size = nb;
  res.max_frames = tmax;
  res.num_pdfs = nd;
  res.grad.assign(nb * tmax * nd, 0.0);
  res.num_log_probs = num.log_probs;
  res.den_log_probs = den.log_probs;
  res.failed.assign(nb, false);

  for (std::size_t b = 0; b < nb; ++b) {
    if (num.Failed(b) || den.Failed(b)) {
      res.failed[b] = true;
      ++res.num_failed;
      const bool in_num = num.Failed(b);
      res.warnings.push_back(
          "item " + std::to_string(batch.order[b]) + ": " +
          (in_num ? "numerator" : "denominator") +
          " forward-backward failed at frame " +
          std::to_string(*(in_num ? num.failed_frame[b] : den.failed_frame[b])) +
          "; excluded from the objective");
      continue;
    }
    res.objective += num.log_probs[b] - den.log_probs[b];
    res.num_frames += batch.lengths[b];
    const std::size_t off = b * tmax * nd, n = batch.lengths[b] * nd;
    for (std::size_t i = 0; i < n; ++i)
      res.grad[off + i] = num.posteriors[off + i] - den.posteriors[off + i];
  }
  CHAINMMI_CHECK(res.num_failed < nb, "all ", nb,
                 " items failed in forward-backward");
  res.loss = -res.objective;
  if (normalize_by_frames) res.loss /= static_cast<double>(res.num_frames);
  return res;
}

}  // namespace chainmmi

#endif  // CHAINMMI_LOSS_HPP_
