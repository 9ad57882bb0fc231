// chainmmi/train_demo.hpp

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

#ifndef CHAINMMI_TRAIN_DEMO_HPP_
#define CHAINMMI_TRAIN_DEMO_HPP_

// Toy end-to-end training: synthetic frames for each transcript, an affine
// map from features to pdf scores, plain gradient ascent on the chain
// objective, and frame accuracy against the alignment the frames were
// generated from.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chainmmi/batching.hpp"
#include "chainmmi/graph.hpp"
#include "chainmmi/loss.hpp"
#include "chainmmi/parallel.hpp"
#include "chainmmi/testing.hpp"
#include "chainmmi/toy_builder.hpp"

namespace chainmmi {

struct TrainDemoConfig {
  std::vector<std::string> phones;
  /// Training transcripts; synthesized from a random phone bigram when empty.
  std::vector<Transcript> corpus;
  std::size_t num_utterances = 200;
  std::size_t min_phones = 3;
  std::size_t max_phones = 8;
  std::size_t frames_per_phone = 4;
  std::size_t epochs = 10;
  std::size_t minibatch = 16;
  double learning_rate = 1.0;
  std::size_t feature_dim = 16;
  double feature_noise = 0.3;
  double self_loop_prob = 0.5;
  double leak_coefficient = 1e-5;
  double smoothing = 0.1;
  bool den_weights = false;
  std::size_t num_threads = 0;
  std::uint64_t seed = 0;
};

struct TrainDemoReport {
  std::size_t num_utterances = 0;
  std::size_t num_pdfs = 0;
  std::size_t num_frames = 0;
  /// Frame-normalized loss, averaged over each epoch's minibatches.
  std::vector<double> epoch_losses;
  double initial_accuracy = 0.0;
  double final_accuracy = 0.0;
};

/// Utterances of min_phones..max_phones phones drawn from a random bigram.
inline std::vector<Transcript> SynthesizeCorpus(std::size_t num_phones,
                                                std::size_t num_utterances,
                                                std::size_t min_phones,
                                                std::size_t max_phones, Rng &rng) {
  CHAINMMI_CHECK(num_phones > 0 && num_utterances > 0 && min_phones >= 1 &&
                     min_phones <= max_phones,
                 "invalid synthetic corpus parameters");
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  std::vector<std::discrete_distribution<std::size_t>> next;
  for (std::size_t p = 0; p <= num_phones; ++p) {  // row num_phones: begin
    std::vector<double> w(num_phones);
    for (double &v : w) v = weight(rng);
    next.emplace_back(w.begin(), w.end());
  }
  std::uniform_int_distribution<std::size_t> length(min_phones, max_phones);
  std::vector<Transcript> corpus;
  for (std::size_t u = 0; u < num_utterances; ++u) {
    std::vector<std::string> word;
    std::size_t prev = num_phones;
    for (std::size_t n = length(rng); n > 0; --n) {
      prev = next[prev](rng);
      word.push_back(std::to_string(prev));
    }
    corpus.push_back({word});
  }
  return corpus;
}

inline TrainDemoReport RunTrainDemo(TrainDemoConfig cfg,
                                    const std::function<void(std::size_t, double)>
                                        &on_epoch = {}) {
  CHAINMMI_CHECK(cfg.frames_per_phone >= 1, "frames per phone must be >= 1");
  CHAINMMI_CHECK(cfg.epochs >= 1, "need at least one epoch");
  CHAINMMI_CHECK(cfg.minibatch >= 1, "minibatch size must be >= 1");
  CHAINMMI_CHECK(cfg.learning_rate > 0.0, "learning rate must be > 0");
  CHAINMMI_CHECK(cfg.feature_dim >= 1, "feature dimension must be >= 1");
  Rng rng(cfg.seed);

  const PhoneTopology topo(cfg.phones, cfg.self_loop_prob);
  if (cfg.corpus.empty()) {
    // Synthetic phone names are indices into the phone table.
    auto synth = SynthesizeCorpus(topo.NumPhones(), cfg.num_utterances,
                                  cfg.min_phones, cfg.max_phones, rng);
    for (auto &t : synth)
      for (auto &w : t)
        for (auto &p : w) p = cfg.phones[std::stoul(p)];
    cfg.corpus = std::move(synth);
  }
  const std::size_t nu = cfg.corpus.size(), nd = topo.NumPdfs(),
                    nf = cfg.feature_dim;

  BigramOptions lm_opts;
  lm_opts.smoothing = cfg.smoothing;
  const BigramLM lm = EstimateBigram(cfg.corpus, lm_opts);
  const ChainGraph den = BuildDenominator(lm, topo);

  // Per-pdf feature centroids; frames are centroid + noise.
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> centroids(nd * nf);
  for (double &v : centroids) v = normal(rng);

  struct Utterance {
    ChainGraph numerator;
    std::vector<PdfId> targets;
    std::vector<double> features;  // (T, F)
  };
  std::vector<Utterance> utts;
  for (const Transcript &t : cfg.corpus) {
    const auto phones = Flatten(t);
    Utterance u{BuildNumerator(phones, topo, cfg.den_weights ? &lm : nullptr), {}, {}};
    for (const auto &p : phones) {
      const std::size_t q = topo.Index(p);
      for (std::size_t k = 0; k < cfg.frames_per_phone; ++k)
        u.targets.push_back(k == 0 ? topo.EntryPdf(q) : topo.LoopPdf(q));
    }
    for (PdfId d : u.targets)
      for (std::size_t j = 0; j < nf; ++j)
        u.features.push_back(centroids[d * nf + j] + cfg.feature_noise * normal(rng));
    utts.push_back(std::move(u));
  }

  // Minibatches of similar lengths: sort once by length.
  std::vector<std::size_t> by_length(nu);
  std::iota(by_length.begin(), by_length.end(), std::size_t{0});
  std::stable_sort(by_length.begin(), by_length.end(), [&](std::size_t a, std::size_t b) {
    return utts[a].targets.size() > utts[b].targets.size();
  });
  std::vector<std::vector<std::size_t>> minibatches;
  for (std::size_t i = 0; i < nu; i += cfg.minibatch)
    minibatches.emplace_back(by_length.begin() + static_cast<std::ptrdiff_t>(i),
                             by_length.begin() + static_cast<std::ptrdiff_t>(
                                                     std::min(nu, i + cfg.minibatch)));

  std::vector<double> weights(nd * nf, 0.0), bias(nd, 0.0);
  auto scores = [&](const Utterance &u) {
    const std::size_t frames = u.targets.size();
    Matrix m(frames, nd);
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t d = 0; d < nd; ++d) {
        double acc = bias[d];
        for (std::size_t j = 0; j < nf; ++j)
          acc += weights[d * nf + j] * u.features[t * nf + j];
        m(t, d) = acc;
      }
    return m;
  };
  auto accuracy = [&]() {
    std::size_t correct = 0, total = 0;
    for (const Utterance &u : utts) {
      const Matrix m = scores(u);
      for (std::size_t t = 0; t < m.rows; ++t) {
        const auto row = m.data.begin() + static_cast<std::ptrdiff_t>(t * nd);
        const auto best = static_cast<std::size_t>(
            std::max_element(row, row + static_cast<std::ptrdiff_t>(nd)) - row);
        correct += best == u.targets[t];
        ++total;
      }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
  };

  TrainDemoReport report;
  report.num_utterances = nu;
  report.num_pdfs = nd;
  for (const Utterance &u : utts) report.num_frames += u.targets.size();
  report.initial_accuracy = accuracy();

  FBOptions fb;
  fb.leak_coefficient = cfg.leak_coefficient;
  ThreadPool pool(cfg.num_threads);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_frames = 0;
    for (const auto &mb : minibatches) {
      std::vector<Matrix> seqs;
      for (std::size_t i : mb) seqs.push_back(scores(utts[i]));
      const LogLikBatch batch = MakeBatch(seqs);
      std::vector<ChainGraph> nums;
      for (std::size_t k : batch.order) nums.push_back(utts[mb[k]].numerator);
      const ChainLossResult res =
          ChainLoss(batch, BatchGraphs(std::move(nums)),
                    BroadcastGraph(den, batch.batch_size), fb, true, &pool);
      epoch_loss += -res.objective;
      epoch_frames += res.num_frames;

      // Ascent on the frame-normalized objective.
      const double step = cfg.learning_rate / static_cast<double>(res.num_frames);
      std::vector<double> gw(nd * nf, 0.0), gb(nd, 0.0);
      for (std::size_t k = 0; k < batch.batch_size; ++k) {
        if (res.failed[k]) continue;
        const Utterance &u = utts[mb[batch.order[k]]];
        for (std::size_t t = 0; t < batch.lengths[k]; ++t) {
          const double *g = &res.grad[batch.Offset(k, t)];
          for (std::size_t d = 0; d < nd; ++d) {
            gb[d] += g[d];
            for (std::size_t j = 0; j < nf; ++j)
              gw[d * nf + j] += g[d] * u.features[t * nf + j];
          }
        }
      }
      for (std::size_t i = 0; i < gw.size(); ++i) weights[i] += step * gw[i];
      for (std::size_t d = 0; d < nd; ++d) bias[d] += step * gb[d];
    }
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(epoch_frames));
    if (on_epoch) on_epoch(epoch + 1, report.epoch_losses.back());
  }
  report.final_accuracy = accuracy();
  return report;
}

}  // namespace chainmmi

#endif  // CHAINMMI_TRAIN_DEMO_HPP_
