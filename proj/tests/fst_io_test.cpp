// tests/fst_io_test.cpp

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "chainmmi/fst_io.hpp"
#include "chainmmi/testing.hpp"

namespace chainmmi {
namespace {

TEST(ParseFstText, SingleStateSelfLoop) {
  const ChainGraph g = ParseFstText("0 0 1 0.0\n0 1.0\n", 1);
  EXPECT_EQ(g.NumStates(), 1u);
  EXPECT_EQ(g.NumPdfs(), 1u);
  ASSERT_EQ(g.NumTransitions(), 1u);
  EXPECT_EQ(g.ForwardTransitions()[0], (Transition{0, 0, 0, 1.0}));
  EXPECT_DOUBLE_EQ(g.FinalProbs()[0], std::exp(-1.0));
  EXPECT_NEAR(g.FinalProbs()[0], 0.3679, 1e-4);
}

TEST(ParseFstText, DefaultsCommentsAndRenumbering) {
  // Start state 7 becomes 0; 3 and 5 follow in order of first appearance.
  const std::string text =
      "# a comment\n"
      "\n"
      "7 5 2\n"
      "5 3 1 0.5\n"
      "3 3 2 0.25\r\n"
      "3\n";
  std::vector<std::uint64_t> ids;
  const ChainGraph g = ParseFstText(text, 2, &ids);
  EXPECT_EQ(ids, (std::vector<std::uint64_t>{7, 5, 3}));
  EXPECT_EQ(g.InitialState(), 0u);
  EXPECT_EQ(g.ArcsFrom(0)[0], (Transition{0, 1, 1, 1.0}));
  EXPECT_EQ(g.ArcsFrom(1)[0].to_state, 2u);
  EXPECT_DOUBLE_EQ(g.ArcsFrom(1)[0].prob, std::exp(-0.5));
  EXPECT_EQ(g.FinalProbs()[2], 1.0);
}

void ExpectParseError(const std::string &text, PdfId d, const std::string &needle) {
  try {
    ParseFstText(text, d);
    FAIL() << "expected a parse error for: " << text;
  } catch (const ChainError &e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(ParseFstText, Errors) {
  ExpectParseError("0 1 0 0.5\n1\n", 2, "line 1: epsilon label");
  ExpectParseError("0 0 1\n0 0 3\n0\n", 2, "line 2: label 3 exceeds");
  ExpectParseError("0 0 1\n0 0 x\n0\n", 2, "line 2: malformed arc line");
  ExpectParseError("0 0 1\n0 0 1 0.5 9\n0\n", 2, "line 2: malformed line");
  ExpectParseError("0 0 1\n0 abc\n", 2, "line 2: malformed final line");
  ExpectParseError("0 0 1 -1.0\n0\n", 2, "line 1: weight must be finite");
  ExpectParseError("0 0 1 inf\n0\n", 2, "line 1: weight must be finite");
  ExpectParseError("0 0 1\n", 2, "no final state");
  ExpectParseError("0 0 1\n0\n0 0.5\n", 2, "line 3: state 0 already declared final");
  ExpectParseError("0 0 1\n0 1 1\n0\n", 2, "state 1 cannot reach");
}

TEST(SerializeFstText, SingleStateSelfLoop) {
  const ChainGraph g = ChainGraph::Build({{0, 0, 0, 1.0}}, 1, 1, 0, {1.0});
  EXPECT_EQ(SerializeFstText(g), "0 0 1 0\n0 0\n");
}

TEST(SerializeFstText, HalfProbabilityWeight) {
  const ChainGraph g = ChainGraph::Build({{0, 0, 0, 0.5}}, 1, 1, 0, {1.0});
  const std::string text = SerializeFstText(g);
  EXPECT_EQ(text, "0 0 1 0.69314718055994529\n0 0\n");
  double w = 0.0;
  ASSERT_EQ(std::sscanf(text.c_str(), "0 0 1 %lf", &w), 1);
  EXPECT_EQ(w, std::log(2.0));
  EXPECT_NEAR(w, 0.6931471805599453, 1e-16);
}

TEST(SerializeFstText, StartsWithInitialStateArcs) {
  const ChainGraph g = ChainGraph::Build(
      {{0, 0, 0, 0.5}, {0, 1, 0, 0.5}, {1, 0, 1, 1.0}, {2, 0, 0, 1.0}}, 3, 2, 2,
      {1.0, 0.0, 0.0});
  const std::string text = SerializeFstText(g);
  EXPECT_EQ(text.rfind("2 0 1 0\n", 0), 0u) << text;
  std::vector<std::uint64_t> ids;
  const ChainGraph h = ParseFstText(text, 2, &ids);
  EXPECT_EQ(ids.front(), 2u);
}

TEST(SerializeFstText, GraphWithoutArcs) {
  const ChainGraph g = ChainGraph::Build({}, 1, 2, 0, {0.5});
  const ChainGraph h = ParseFstText(SerializeFstText(g), 2);
  EXPECT_EQ(h.NumTransitions(), 0u);
  EXPECT_NEAR(h.FinalProbs()[0], 0.5, 1e-16);
}

// Random graph with a random start state so that renumbering is exercised.
ChainGraph RandomRelabeledGraph(Rng &rng) {
  const ChainGraph g = RandomGraph(rng, 6, 14, 5);
  std::vector<StateId> perm(g.NumStates());
  std::iota(perm.begin(), perm.end(), StateId{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Transition> arcs;
  for (const Transition &t : g.ForwardTransitions())
    arcs.push_back({perm[t.from_state], perm[t.to_state], t.pdf_id, t.prob});
  std::vector<double> finals(g.NumStates());
  for (StateId s = 0; s < g.NumStates(); ++s) finals[perm[s]] = g.FinalProbs()[s];
  return ChainGraph::Build(arcs, g.NumStates(), g.NumPdfs(), perm[g.InitialState()],
                           finals);
}

// parse(serialize(g)) equals g up to the documented renumbering and the
// exp(-(-ln p)) round trip.
void CheckRoundTrip(const ChainGraph &g) {
  const std::string text = SerializeFstText(g);
  std::vector<std::uint64_t> ids;
  const ChainGraph h = ParseFstText(text, g.NumPdfs(), &ids);
  ASSERT_EQ(h.NumStates(), g.NumStates());
  ASSERT_EQ(h.NumTransitions(), g.NumTransitions());
  EXPECT_EQ(h.InitialState(), 0u);
  EXPECT_EQ(ids[0], g.InitialState());

  auto key = [](const Transition &t) { return std::tie(t.from_state, t.to_state, t.pdf_id); };
  std::vector<Transition> mapped;
  for (const Transition &t : h.ForwardTransitions())
    mapped.push_back({static_cast<StateId>(ids[t.from_state]),
                      static_cast<StateId>(ids[t.to_state]), t.pdf_id, t.prob});
  auto by_key = [&](const Transition &a, const Transition &b) {
    return std::tuple(key(a), a.prob) < std::tuple(key(b), b.prob);
  };
  std::vector<Transition> orig(g.ForwardTransitions().begin(), g.ForwardTransitions().end());
  std::sort(mapped.begin(), mapped.end(), by_key);
  std::sort(orig.begin(), orig.end(), by_key);
  for (std::size_t i = 0; i < orig.size(); ++i) {
    EXPECT_EQ(key(mapped[i]), key(orig[i]));
    EXPECT_NEAR(mapped[i].prob, orig[i].prob, 1e-15 * orig[i].prob);
  }
  for (StateId s = 0; s < h.NumStates(); ++s)
    EXPECT_NEAR(h.FinalProbs()[s], g.FinalProbs()[ids[s]], 1e-15 * g.FinalProbs()[ids[s]]);

}

TEST(FstText, RoundTripProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) CheckRoundTrip(RandomRelabeledGraph(rng));
}

TEST(FstText, ArcOrderDoesNotMatter) {
  const ChainGraph a = ParseFstText("0 1 1 0.1\n0 0 2 0.2\n1 1 1 0.3\n1 0\n", 2);
  const ChainGraph b = ParseFstText("0 0 2 0.2\n1 1 1 0.3\n0 1 1 0.1\n1 0\n", 2);
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace chainmmi
