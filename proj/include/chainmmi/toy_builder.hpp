// chainmmi/toy_builder.hpp

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

#ifndef CHAINMMI_TOY_BUILDER_HPP_
#define CHAINMMI_TOY_BUILDER_HPP_

// Toy-scale numerator/denominator construction from phone transcripts.
//
// Topology: each phone q owns two pdfs, 2q (first frame) and 2q+1
// (continuation).  Entering q emits pdf 2q and lands in q's loop state; the
// loop state repeats with pdf 2q+1 and probability rho, or leaves with
// probability 1 - rho.  Minimum duration is one frame per phone.

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "chainmmi/common.hpp"
#include "chainmmi/graph.hpp"

namespace chainmmi {

class PhoneTopology {
 public:
  explicit PhoneTopology(std::vector<std::string> phones,
                         double self_loop_prob = 0.5)
      : phones_(std::move(phones)), self_loop_prob_(self_loop_prob) {
    CHAINMMI_CHECK(!phones_.empty(), "phone topology needs at least one phone");
    CHAINMMI_CHECK(self_loop_prob_ > 0.0 && self_loop_prob_ < 1.0,
                   "self-loop probability must be in (0, 1), got ",
                   self_loop_prob_);
    for (std::size_t i = 0; i < phones_.size(); ++i) {
      CHAINMMI_CHECK(!phones_[i].empty(), "phone ", i, " has an empty name");
      CHAINMMI_CHECK(index_.emplace(phones_[i], i).second, "duplicate phone '",
                     phones_[i], "'");
    }
  }

  std::size_t NumPhones() const { return phones_.size(); }
  PdfId NumPdfs() const { return static_cast<PdfId>(2 * phones_.size()); }
  double SelfLoopProb() const { return self_loop_prob_; }
  const std::vector<std::string> &Phones() const { return phones_; }

  std::size_t Index(const std::string &phone) const {
    auto it = index_.find(phone);
    CHAINMMI_CHECK(it != index_.end(), "unknown phone '", phone, "'");
    return it->second;
  }
  bool Contains(const std::string &phone) const { return index_.count(phone) > 0; }
  PdfId EntryPdf(std::size_t phone) const { return static_cast<PdfId>(2 * phone); }
  PdfId LoopPdf(std::size_t phone) const { return static_cast<PdfId>(2 * phone + 1); }

 private:
  std::vector<std::string> phones_;
  double self_loop_prob_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Phone bigram with begin/end of sentence.  Row V of `probs` is the begin
/// history and column V is end-of-sentence, V = vocab.size().
struct BigramLM {
  std::vector<std::string> vocab;
  std::vector<std::vector<double>> probs;

  std::size_t Size() const { return vocab.size(); }
  std::size_t Index(const std::string &phone) const {
    for (std::size_t i = 0; i < vocab.size(); ++i)
      if (vocab[i] == phone) return i;
    detail::Fail("phone '", phone, "' is not in the language model");
  }
  double Prob(std::size_t next, std::size_t history) const {
    return probs[history][next];
  }
  double BeginProb(std::size_t next) const { return probs[Size()][next]; }
  double EndProb(std::size_t history) const { return probs[history][Size()]; }
};

struct BigramOptions {
  /// Silence phone to insert; disabled when empty.
  std::optional<std::string> silence;
  double sil_between = 0.2;
  double sil_boundary = 0.8;
  /// Add-k smoothing constant.
  double smoothing = 0.1;
};

/// A transcript is a list of words, each a non-empty list of phones.
using Transcript = std::vector<std::vector<std::string>>;

inline std::vector<std::string> Flatten(const Transcript &t) {
  std::vector<std::string> phones;
  for (const auto &w : t) phones.insert(phones.end(), w.begin(), w.end());
  return phones;
}

/// Expected-count bigram estimation.  Optional silence is accounted for by
/// fractional counts: at a gap between tokens u and v where silence is
/// inserted with probability q, (u, v) gets 1 - q and (u, sil), (sil, v)
/// get q each.
inline BigramLM EstimateBigram(std::span<const Transcript> corpus,
                               const BigramOptions &opts = {}) {
  CHAINMMI_CHECK(!corpus.empty(), "cannot estimate a bigram from an empty corpus");
  CHAINMMI_CHECK(opts.smoothing >= 0.0, "smoothing must be >= 0");
  CHAINMMI_CHECK(opts.sil_between >= 0.0 && opts.sil_between <= 1.0 &&
                     opts.sil_boundary >= 0.0 && opts.sil_boundary <= 1.0,
                 "silence probabilities must be in [0, 1]");
  BigramLM lm;
  std::unordered_map<std::string, std::size_t> index;
  auto add = [&](const std::string &p) {
    if (index.emplace(p, lm.vocab.size()).second) lm.vocab.push_back(p);
  };
  for (const Transcript &t : corpus)
    for (const auto &w : t)
      for (const auto &p : w) add(p);
  if (opts.silence) add(*opts.silence);
  CHAINMMI_CHECK(!lm.vocab.empty(), "corpus contains no phones");

  const std::size_t v = lm.vocab.size(), bos = v, eos = v;
  std::vector<std::vector<double>> counts(v + 1, std::vector<double>(v + 1, 0.0));
  const std::size_t sil = opts.silence ? index[*opts.silence] : 0;
  auto gap = [&](std::size_t u, std::size_t next, double q) {
    if (!opts.silence || q == 0.0) {
      counts[u][next] += 1.0;
      return;
    }
    counts[u][next] += 1.0 - q;
    counts[u][sil] += q;
    counts[sil][next] += q;
  };

  for (const Transcript &t : corpus) {
    std::size_t prev = bos;
    bool first = true;
    for (const auto &w : t) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        const std::size_t cur = index[w[i]];
        const double q = first ? opts.sil_boundary : (i == 0 ? opts.sil_between : 0.0);
        gap(prev, cur, q);
        prev = cur;
        first = false;
      }
    }
    CHAINMMI_CHECK(!first, "corpus contains an empty transcript");
    gap(prev, eos, opts.sil_boundary);
  }

  lm.probs.assign(v + 1, std::vector<double>(v + 1, 0.0));
  for (std::size_t h = 0; h <= v; ++h) {
    // The begin history cannot be followed directly by end-of-sentence.
    const std::size_t ncols = h == bos ? v : v + 1;
    double total = 0.0;
    for (std::size_t y = 0; y < ncols; ++y) total += counts[h][y] + opts.smoothing;
    CHAINMMI_CHECK(total > 0.0, "history '", h == bos ? "<s>" : lm.vocab[h],
                   "' has no counts; use smoothing > 0");
    for (std::size_t y = 0; y < ncols; ++y)
      lm.probs[h][y] = (counts[h][y] + opts.smoothing) / total;
  }
  return lm;
}

/// Linear numerator graph.  State 0 is the start state and state k (k >= 1)
/// is the loop state of the k-th phone.  With `den_weights`, arc and final
/// weights are taken from the denominator construction for the same phone
/// sequence, so that every numerator path is also a denominator path of
/// equal weight.
inline ChainGraph BuildNumerator(std::span<const std::string> phones,
                                 const PhoneTopology &topo,
                                 const BigramLM *den_weights = nullptr) {
  CHAINMMI_CHECK(!phones.empty(), "cannot build a numerator for an empty phone sequence");
  const double rho = topo.SelfLoopProb();
  const std::size_t n = phones.size();
  std::vector<std::size_t> ids, lm_ids;
  for (const auto &p : phones) {
    ids.push_back(topo.Index(p));
    if (den_weights) lm_ids.push_back(den_weights->Index(p));
  }

  std::vector<Transition> arcs;
  const double enter = den_weights ? den_weights->BeginProb(lm_ids[0]) : 1.0;
  arcs.push_back({0, 1, topo.EntryPdf(ids[0]), enter});
  for (std::size_t k = 0; k < n; ++k) {
    const auto loop = static_cast<StateId>(k + 1);
    arcs.push_back({loop, loop, topo.LoopPdf(ids[k]), rho});
    if (k + 1 < n) {
      const double next =
          den_weights ? (1.0 - rho) * den_weights->Prob(lm_ids[k + 1], lm_ids[k])
                      : 1.0 - rho;
      arcs.push_back({loop, static_cast<StateId>(k + 2), topo.EntryPdf(ids[k + 1]), next});
    }
  }
  std::vector<double> finals(n + 1, 0.0);
  finals[n] = den_weights ? (1.0 - rho) * den_weights->EndProb(lm_ids[n - 1])
                          : 1.0 - rho;
  return ChainGraph::Build(std::move(arcs), static_cast<StateId>(n + 1),
                           topo.NumPdfs(), 0, std::move(finals));
}

/// Denominator graph: state 0 is the start state, state j + 1 is the loop
/// state of lm.vocab[j].
inline ChainGraph BuildDenominator(const BigramLM &lm, const PhoneTopology &topo) {
  const std::size_t v = lm.Size();
  CHAINMMI_CHECK(v > 0 && lm.probs.size() == v + 1, "malformed language model");
  std::vector<std::size_t> ids;
  for (const auto &p : lm.vocab) {
    CHAINMMI_CHECK(topo.Contains(p), "language-model phone '", p,
                   "' is not in the phone topology");
    ids.push_back(topo.Index(p));
  }
  const double rho = topo.SelfLoopProb();
  std::vector<Transition> arcs;
  for (std::size_t j = 0; j < v; ++j)
    arcs.push_back({0, static_cast<StateId>(j + 1), topo.EntryPdf(ids[j]),
                    lm.BeginProb(j)});
  std::vector<double> finals(v + 1, 0.0);
  for (std::size_t j = 0; j < v; ++j) {
    const auto loop = static_cast<StateId>(j + 1);
    arcs.push_back({loop, loop, topo.LoopPdf(ids[j]), rho});
    for (std::size_t k = 0; k < v; ++k)
      arcs.push_back({loop, static_cast<StateId>(k + 1), topo.EntryPdf(ids[k]),
                      (1.0 - rho) * lm.Prob(k, j)});
    finals[j + 1] = (1.0 - rho) * lm.EndProb(j);
  }
  return ChainGraph::Build(std::move(arcs), static_cast<StateId>(v + 1),
                           topo.NumPdfs(), 0, std::move(finals));
}

/// One phone per line; line number (from 0) is the phone index.
inline std::vector<std::string> ReadPhoneTable(std::istream &in) {
  std::vector<std::string> phones;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string name, extra;
    fields >> name;
    CHAINMMI_CHECK(!name.empty(), "phone table line ", lineno, " is empty");
    CHAINMMI_CHECK(!(fields >> extra), "phone table line ", lineno,
                   " has more than one field");
    phones.push_back(name);
  }
  CHAINMMI_CHECK(!phones.empty(), "phone table is empty");
  return phones;
}

/// One utterance per line, phones separated by whitespace, '|' between
/// words.  Blank lines are skipped.
inline std::vector<Transcript> ReadTranscripts(std::istream &in) {
  std::vector<Transcript> corpus;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    Transcript t(1);
    for (std::string tok; fields >> tok;) {
      if (tok == "|") {
        if (!t.back().empty()) t.emplace_back();
      } else {
        t.back().push_back(tok);
      }
    }
    if (t.back().empty()) t.pop_back();
    if (!t.empty()) corpus.push_back(std::move(t));
  }
  return corpus;
}

}  // namespace chainmmi

#endif  // CHAINMMI_TOY_BUILDER_HPP_
