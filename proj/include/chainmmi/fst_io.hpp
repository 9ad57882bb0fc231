// chainmmi/fst_io.hpp

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

#ifndef CHAINMMI_FST_IO_HPP_
#define CHAINMMI_FST_IO_HPP_

// Text acceptor format, one entry per line:
//
//   src dst label [weight]     arc; label = pdf-id + 1, label 0 (epsilon)
//                              is rejected
//   state [weight]             final state
//
// Weights are -ln(probability); a missing weight means 0.  Lines starting
// with '#' and blank lines are ignored.  The source state of the first arc
// line is the start state.  States are renumbered densely: the start state
// becomes 0, the rest follow in order of first appearance.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "chainmmi/common.hpp"
#include "chainmmi/graph.hpp"

namespace chainmmi {

namespace detail {

inline bool ParseUint(const std::string &tok, std::uint64_t *out) {
  if (tok.empty() || tok[0] < '0' || tok[0] > '9') return false;
  errno = 0;
  char *end = nullptr;
  const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') return false;
  *out = v;
  return true;
}

inline bool ParseDouble(const std::string &tok, double *out) {
  if (tok.empty()) return false;
  errno = 0;
  char *end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (errno == ERANGE && std::fabs(v) > 1.0) return false;
  if (*end != '\0') return false;
  *out = v;
  return true;
}

/// "%.17g", with negative zero printed as "0".
inline std::string FormatDouble(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses a text FST.  If `original_ids` is non-null it receives, for each
/// new dense state index, the state id used in the text.
inline ChainGraph ParseFstText(std::istream &in, PdfId num_pdfs,
                               std::vector<std::uint64_t> *original_ids =
                                   nullptr) {
  struct Arc {
    std::uint64_t src, dst, label;
    double weight;
  };
  std::vector<Arc> arcs;
  std::vector<std::pair<std::uint64_t, double>> finals;
  std::vector<std::uint64_t> order;  // states by first appearance
  std::unordered_map<std::uint64_t, StateId> dense;
  std::unordered_map<std::uint64_t, std::size_t> final_line;
  auto mention = [&](std::uint64_t s) {
    if (dense.emplace(s, 0).second) order.push_back(s);
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;

    std::uint64_t a = 0, b = 0, label = 0;
    double w = 0.0;
    if (tok.size() == 3 || tok.size() == 4) {
      CHAINMMI_CHECK(detail::ParseUint(tok[0], &a) &&
                         detail::ParseUint(tok[1], &b) &&
                         detail::ParseUint(tok[2], &label) &&
                         (tok.size() == 3 || detail::ParseDouble(tok[3], &w)),
                     "line ", lineno, ": malformed arc line '", line, "'");
      CHAINMMI_CHECK(label != 0, "line ", lineno,
                     ": epsilon label 0 is not allowed");
      CHAINMMI_CHECK(label <= num_pdfs, "line ", lineno, ": label ", label,
                     " exceeds the number of pdfs ", num_pdfs);
      CHAINMMI_CHECK(std::isfinite(w) && w >= 0.0, "line ", lineno,
                     ": weight must be finite and non-negative, got ", tok[3]);
      mention(a);
      mention(b);
      arcs.push_back({a, b, label, w});
    } else if (tok.size() == 1 || tok.size() == 2) {
      CHAINMMI_CHECK(detail::ParseUint(tok[0], &a) &&
                         (tok.size() == 1 || detail::ParseDouble(tok[1], &w)),
                     "line ", lineno, ": malformed final line '", line, "'");
      CHAINMMI_CHECK(std::isfinite(w) && w >= 0.0, "line ", lineno,
                     ": weight must be finite and non-negative, got ", tok[1]);
      CHAINMMI_CHECK(final_line.emplace(a, lineno).second, "line ", lineno,
                     ": state ", a, " already declared final on line ",
                     final_line[a]);
      mention(a);
      finals.emplace_back(a, w);
    } else {
      detail::Fail("line ", lineno, ": malformed line '", line, "'");
    }
  }
  CHAINMMI_CHECK(!finals.empty(), "FST has no final state");

  const std::uint64_t start = arcs.empty() ? order.front() : arcs.front().src;
  std::vector<std::uint64_t> ids{start};
  for (std::uint64_t s : order)
    if (s != start) ids.push_back(s);
  CHAINMMI_CHECK(ids.size() < UINT32_MAX, "too many states");
  for (std::size_t i = 0; i < ids.size(); ++i)
    dense[ids[i]] = static_cast<StateId>(i);

  std::vector<Transition> transitions;
  transitions.reserve(arcs.size());
  for (const Arc &arc : arcs)
    transitions.push_back({dense[arc.src], dense[arc.dst],
                           static_cast<PdfId>(arc.label - 1),
                           std::exp(-arc.weight)});
  std::vector<double> final_probs(ids.size(), 0.0);
  for (const auto &[s, w] : finals) final_probs[dense[s]] = std::exp(-w);

  if (original_ids) *original_ids = ids;
  return ChainGraph::Build(std::move(transitions),
                           static_cast<StateId>(ids.size()), num_pdfs, 0,
                           std::move(final_probs));
}

inline ChainGraph ParseFstText(const std::string &text, PdfId num_pdfs,
                               std::vector<std::uint64_t> *original_ids =
                                   nullptr) {
  std::istringstream in(text);
  return ParseFstText(in, num_pdfs, original_ids);
}

/// Writes arcs out of the initial state first, then the remaining arcs in
/// forward-layout order, then the final lines in state order.
inline void SerializeFstText(const ChainGraph &graph, std::ostream &out) {
  auto write_arc = [&out](const Transition &t) {
    out << t.from_state << ' ' << t.to_state << ' ' << (t.pdf_id + 1) << ' '
        << detail::FormatDouble(-std::log(t.prob)) << '\n';
  };
  const StateId init = graph.InitialState();
  for (const Transition &t : graph.ArcsFrom(init)) write_arc(t);
  for (const Transition &t : graph.ForwardTransitions())
    if (t.from_state != init) write_arc(t);
  const auto finals = graph.FinalProbs();
  // A graph without arcs still needs its start state mentioned first.
  if (graph.NumTransitions() == 0 && finals[init] > 0.0)
    out << init << ' ' << detail::FormatDouble(-std::log(finals[init])) << '\n';
  for (StateId s = 0; s < graph.NumStates(); ++s) {
    if (finals[s] > 0.0 && !(graph.NumTransitions() == 0 && s == init))
      out << s << ' ' << detail::FormatDouble(-std::log(finals[s])) << '\n';
  }
}

inline std::string SerializeFstText(const ChainGraph &graph) {
  std::ostringstream out;
  SerializeFstText(graph, out);
  return out.str();
}

}  // namespace chainmmi

#endif  // CHAINMMI_FST_IO_HPP_
