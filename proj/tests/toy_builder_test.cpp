// tests/toy_builder_test.cpp

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

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "chainmmi/forward_backward.hpp"
#include "chainmmi/oracle.hpp"
#include "chainmmi/toy_builder.hpp"

namespace chainmmi {
namespace {

using Phones = std::vector<std::string>;

Transcript Words(std::initializer_list<Phones> words) { return Transcript(words); }

std::set<std::vector<PdfId>> PdfStrings(const ChainGraph &g, std::size_t frames) {
  std::set<std::vector<PdfId>> out;
  ForEachPath(g, Matrix(frames, g.NumPdfs(), 0.0), frames,
              [&](const EnumeratedPath &p) { out.insert(p.pdfs); });
  return out;
}

TEST(PhoneTopology, PdfNumbering) {
  const PhoneTopology topo({"a", "b", "c"});
  EXPECT_EQ(topo.NumPdfs(), 6u);
  EXPECT_EQ(topo.EntryPdf(topo.Index("b")), 2u);
  EXPECT_EQ(topo.LoopPdf(topo.Index("b")), 3u);
  EXPECT_EQ(topo.SelfLoopProb(), 0.5);
  EXPECT_THROW(PhoneTopology({}), ChainError);
  EXPECT_THROW(PhoneTopology({"a", "a"}), ChainError);
  EXPECT_THROW(PhoneTopology({"a"}, 1.0), ChainError);
  EXPECT_THROW(PhoneTopology({"a"}, 0.0), ChainError);
  EXPECT_THROW(topo.Index("z"), ChainError);
}

TEST(BuildNumerator, SinglePhone) {
  const PhoneTopology topo({"a"});
  const ChainGraph g = BuildNumerator(Phones{"a"}, topo);
  EXPECT_EQ(g.NumStates(), 2u);
  ASSERT_EQ(g.NumTransitions(), 2u);
  EXPECT_EQ(g.ArcsFrom(0)[0], (Transition{0, 1, 0, 1.0}));
  EXPECT_EQ(g.ArcsFrom(1)[0], (Transition{1, 1, 1, 0.5}));
  EXPECT_EQ(g.FinalProbs()[1], 0.5);
  for (std::size_t t = 1; t <= 4; ++t) {
    std::vector<PdfId> expect(t, 1);
    expect[0] = 0;
    EXPECT_EQ(PdfStrings(g, t), (std::set<std::vector<PdfId>>{expect}));
  }
}

TEST(BuildNumerator, TwoPhonesTwoFrames) {
  const PhoneTopology topo({"a", "b"});
  const ChainGraph g = BuildNumerator(Phones{"a", "b"}, topo);
  const auto paths = EnumeratePaths(g, Matrix(2, 4, 0.0), 2);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].pdfs, (std::vector<PdfId>{0, 2}));
  EXPECT_NEAR(paths[0].prob, 0.25, 1e-15);
  EXPECT_TRUE(EnumeratePaths(g, Matrix(1, 4, 0.0), 1).empty());
}

TEST(BuildNumerator, Errors) {
  const PhoneTopology topo({"a", "b"});
  EXPECT_THROW(BuildNumerator(Phones{}, topo), ChainError);
  EXPECT_THROW(BuildNumerator(Phones{"a", "x"}, topo), ChainError);
}

TEST(EstimateBigram, SinglePhoneCorpus) {
  BigramOptions opts;
  opts.smoothing = 0.0;
  const std::vector<Transcript> corpus = {Words({{"a"}})};
  const BigramLM lm = EstimateBigram(corpus, opts);
  ASSERT_EQ(lm.vocab, Phones{"a"});
  EXPECT_EQ(lm.BeginProb(0), 1.0);
  EXPECT_EQ(lm.EndProb(0), 1.0);
  EXPECT_EQ(lm.Prob(0, 0), 0.0);
}

// Counting done directly on phone strings, without the index bookkeeping.
std::map<std::pair<std::string, std::string>, double> CountBigrams(
    const std::vector<Phones> &corpus) {
  std::map<std::pair<std::string, std::string>, double> counts;
  for (const Phones &u : corpus) {
    std::string prev = "<s>";
    for (const auto &p : u) {
      counts[{prev, p}] += 1.0;
      prev = p;
    }
    counts[{prev, "</s>"}] += 1.0;
  }
  return counts;
}

TEST(EstimateBigram, HandCountedCorpus) {
  BigramOptions opts;
  opts.smoothing = 0.0;
  const std::vector<Transcript> corpus = {Words({{"a", "b"}}), Words({{"a"}})};
  const BigramLM lm = EstimateBigram(corpus, opts);
  const std::size_t a = lm.Index("a"), b = lm.Index("b");
  EXPECT_EQ(lm.Prob(b, a), 0.5);
  EXPECT_EQ(lm.EndProb(a), 0.5);
  EXPECT_EQ(lm.BeginProb(a), 1.0);
  EXPECT_EQ(lm.EndProb(b), 1.0);

  const auto counts = CountBigrams({{"a", "b"}, {"a"}});
  double from_a = 0.0;
  for (const auto &[key, c] : counts)
    if (key.first == "a") from_a += c;
  EXPECT_EQ(lm.Prob(b, a), (counts.at({"a", "b"}) / from_a));
  EXPECT_EQ(lm.EndProb(a), (counts.at({"a", "</s>"}) / from_a));
}

TEST(EstimateBigram, RandomCorporaMatchIndependentCounts) {
  std::mt19937_64 rng(3);
  const Phones inventory = {"p", "q", "r", "s"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Phones> flat;
    std::vector<Transcript> corpus;
    for (int u = 0; u < 1 + trial % 6; ++u) {
      Phones phones;
      for (std::size_t i = 0, n = 1 + rng() % 5; i < n; ++i)
        phones.push_back(inventory[rng() % inventory.size()]);
      flat.push_back(phones);
      corpus.push_back({phones});
    }
    BigramOptions opts;
    opts.smoothing = 0.0;
    const BigramLM lm = EstimateBigram(corpus, opts);
    const auto counts = CountBigrams(flat);
    std::map<std::string, double> totals;
    for (const auto &[key, c] : counts) totals[key.first] += c;
    auto name = [&](std::size_t i, bool next) {
      return i < lm.Size() ? lm.vocab[i] : std::string(next ? "</s>" : "<s>");
    };
    for (std::size_t h = 0; h <= lm.Size(); ++h)
      for (std::size_t y = 0; y <= lm.Size(); ++y) {
        const auto it = counts.find({name(h, false), name(y, true)});
        const double expect = it == counts.end() ? 0.0 : it->second / totals[name(h, false)];
        EXPECT_NEAR(lm.Prob(y, h), expect, 1e-15);
      }
  }
}

TEST(EstimateBigram, RowsNormalize) {
  BigramOptions opts;
  opts.silence = "sil";
  const std::vector<Transcript> corpus = {Words({{"a", "b"}, {"c"}}),
                                          Words({{"c"}, {"c", "a"}, {"b"}})};
  for (double k : {0.0, 0.1, 2.0}) {
    opts.smoothing = k;
    const BigramLM lm = EstimateBigram(corpus, opts);
    ASSERT_EQ(lm.vocab, (Phones{"a", "b", "c", "sil"}));
    for (std::size_t h = 0; h <= lm.Size(); ++h) {
      double sum = 0.0;
      for (double p : lm.probs[h]) sum += p;
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    EXPECT_EQ(lm.probs[lm.Size()][lm.Size()], 0.0);
  }
}

TEST(EstimateBigram, SilenceFractionalCounts) {
  BigramOptions opts;
  opts.silence = "sil";
  opts.smoothing = 0.0;
  const std::vector<Transcript> corpus = {Words({{"a"}, {"b"}})};
  const BigramLM lm = EstimateBigram(corpus, opts);
  const std::size_t a = lm.Index("a"), b = lm.Index("b"), sil = lm.Index("sil");
  EXPECT_NEAR(lm.BeginProb(a), 0.2, 1e-15);
  EXPECT_NEAR(lm.BeginProb(sil), 0.8, 1e-15);
  EXPECT_NEAR(lm.Prob(b, a), 0.8, 1e-15);
  EXPECT_NEAR(lm.Prob(sil, a), 0.2, 1e-15);
  EXPECT_NEAR(lm.EndProb(b), 0.2, 1e-15);
  EXPECT_NEAR(lm.Prob(sil, b), 0.8, 1e-15);
  EXPECT_NEAR(lm.Prob(a, sil), 0.8 / 1.8, 1e-15);
  EXPECT_NEAR(lm.Prob(b, sil), 0.2 / 1.8, 1e-15);
  EXPECT_NEAR(lm.EndProb(sil), 0.8 / 1.8, 1e-15);
}

TEST(EstimateBigram, WithinWordGapsGetNoSilence) {
  BigramOptions opts;
  opts.silence = "sil";
  opts.smoothing = 0.0;
  const std::vector<Transcript> corpus = {Words({{"a", "b"}})};
  const BigramLM lm = EstimateBigram(corpus, opts);
  EXPECT_EQ(lm.Prob(lm.Index("b"), lm.Index("a")), 1.0);
}

TEST(EstimateBigram, Errors) {
  EXPECT_THROW(EstimateBigram(std::vector<Transcript>{}), ChainError);
  EXPECT_THROW(EstimateBigram(std::vector<Transcript>{Transcript{}}), ChainError);
}

TEST(BuildDenominator, SinglePhoneLm) {
  const double alpha = 0.3;
  BigramLM lm;
  lm.vocab = {"a"};
  lm.probs = {{alpha, 1.0 - alpha}, {1.0, 0.0}};
  const PhoneTopology topo({"a"});
  const ChainGraph g = BuildDenominator(lm, topo);
  EXPECT_EQ(g.NumStates(), 2u);
  EXPECT_EQ(g.ArcsFrom(0)[0], (Transition{0, 1, 0, 1.0}));
  ASSERT_EQ(g.ArcsFrom(1).size(), 2u);
  EXPECT_EQ(g.ArcsFrom(1)[0], (Transition{1, 1, 0, 0.5 * alpha}));
  EXPECT_EQ(g.ArcsFrom(1)[1], (Transition{1, 1, 1, 0.5}));
  EXPECT_EQ(g.FinalProbs()[1], 0.5 * (1.0 - alpha));
  // Every accepted string starts with pdf 0.
  for (std::size_t t = 1; t <= 4; ++t)
    for (const auto &s : PdfStrings(g, t)) EXPECT_EQ(s[0], 0u);
  EXPECT_EQ(PdfStrings(g, 3).size(), 4u);
}

TEST(BuildDenominator, TwoPhoneOracleEquivalence) {
  const std::vector<Transcript> corpus = {Words({{"a", "b"}}), Words({{"b", "b", "a"}})};
  const BigramLM lm = EstimateBigram(corpus);
  const PhoneTopology topo({"a", "b"});
  const ChainGraph g = BuildDenominator(lm, topo);
  FBOptions opts;
  opts.leak_coefficient = 0.0;
  const Matrix zeros(3, 4, 0.0);
  const FBResult r = ForwardBackward(MakeBatch(std::vector<Matrix>{zeros}),
                                     BatchGraphs({g}), opts);
  EXPECT_NEAR(r.log_probs[0], BruteLogProb(g, zeros, 3), 1e-12);
}

TEST(BuildDenominator, ContainsNumeratorPaths) {
  const std::vector<Transcript> corpus = {Words({{"a", "b"}})};
  const BigramLM lm = EstimateBigram(corpus);
  const PhoneTopology topo({"a", "b"});
  const ChainGraph den = BuildDenominator(lm, topo);
  const ChainGraph num = BuildNumerator(Phones{"a", "b"}, topo);
  for (std::size_t t = 2; t <= 6; ++t) {
    const auto den_strings = PdfStrings(den, t);
    for (const auto &s : PdfStrings(num, t)) EXPECT_TRUE(den_strings.count(s));
  }
}

TEST(BuildDenominator, StochasticLoopStates) {
  BigramOptions opts;
  opts.silence = "sil";
  const std::vector<Transcript> corpus = {Words({{"a", "b"}, {"c"}}), Words({{"c", "a"}})};
  const BigramLM lm = EstimateBigram(corpus, opts);
  const PhoneTopology topo({"sil", "a", "b", "c"}, 0.7);
  const ChainGraph g = BuildDenominator(lm, topo);
  for (StateId s = 0; s < g.NumStates(); ++s) {
    double mass = g.FinalProbs()[s];
    for (const Transition &t : g.ArcsFrom(s)) mass += t.prob;
    EXPECT_NEAR(mass, 1.0, 1e-12) << "state " << s;
  }
}

TEST(BuildDenominator, VocabularyMismatch) {
  const BigramLM lm = EstimateBigram(std::vector<Transcript>{Words({{"a", "z"}})});
  EXPECT_THROW(BuildDenominator(lm, PhoneTopology({"a"})), ChainError);
}

TEST(BuildNumerator, DenominatorWeightsMatchDenominatorArcs) {
  const std::vector<Transcript> corpus = {Words({{"a", "b"}}), Words({{"b", "a", "a"}})};
  const BigramLM lm = EstimateBigram(corpus);
  const PhoneTopology topo({"a", "b"});
  const ChainGraph den = BuildDenominator(lm, topo);
  const Phones seq = {"b", "a", "a"};
  const ChainGraph num = BuildNumerator(seq, topo, &lm);
  // Each numerator path has the same probability as the den path with the
  // same pdf string and state sequence.
  const Matrix zeros(5, 4, 0.0);
  std::map<std::vector<PdfId>, double> den_probs;
  ForEachPath(den, zeros, 5, [&](const EnumeratedPath &p) { den_probs[p.pdfs] += p.prob; });
  ForEachPath(num, zeros, 5, [&](const EnumeratedPath &p) {
    ASSERT_TRUE(den_probs.count(p.pdfs));
    EXPECT_NEAR(p.prob, den_probs[p.pdfs], 1e-15);
  });
}

TEST(Readers, PhoneTable) {
  std::istringstream in("sil\na\nb\n");
  EXPECT_EQ(ReadPhoneTable(in), (Phones{"sil", "a", "b"}));
  std::istringstream two_fields("a b\n");
  EXPECT_THROW(ReadPhoneTable(two_fields), ChainError);
  std::istringstream blank("a\n\nb\n");
  EXPECT_THROW(ReadPhoneTable(blank), ChainError);
  std::istringstream empty("");
  EXPECT_THROW(ReadPhoneTable(empty), ChainError);
}

TEST(Readers, Transcripts) {
  std::istringstream in("a b | c\n\n| d | | e\n");
  const std::vector<Transcript> corpus = ReadTranscripts(in);
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0], (Transcript{{"a", "b"}, {"c"}}));
  EXPECT_EQ(corpus[1], (Transcript{{"d"}, {"e"}}));
}

}  // namespace
}  // namespace chainmmi
