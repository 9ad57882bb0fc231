// chainmmi/oracle.hpp

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

#ifndef CHAINMMI_ORACLE_HPP_
#define CHAINMMI_ORACLE_HPP_

// Brute-force references: explicit enumeration of every accepting path of a
// graph, and central finite differences.  Exponential; for tests only.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "chainmmi/batching.hpp"
#include "chainmmi/common.hpp"
#include "chainmmi/graph.hpp"

namespace chainmmi {

inline constexpr std::size_t kMaxEnumeratedPaths = 1000000;

struct EnumeratedPath {
  std::vector<StateId> states;  // T + 1 states, starting at the initial state
  std::vector<PdfId> pdfs;      // T pdfs
  double prob = 0.0;            // arcs * final * exp(sum of L along the path)
};

/// Calls visit(path) for every accepting path of exactly `num_frames` arcs.
/// `loglikes` is (num_frames, D) or longer; only the first num_frames rows
/// are read.
template <typename Visitor>
void ForEachPath(const ChainGraph &graph, const Matrix &loglikes,
                 std::size_t num_frames, Visitor &&visit) {
  CHAINMMI_CHECK(loglikes.cols == graph.NumPdfs(), "log-likelihoods have ",
                 loglikes.cols, " columns, graph has ", graph.NumPdfs(), " pdfs");
  CHAINMMI_CHECK(loglikes.rows >= num_frames, "log-likelihoods have only ",
                 loglikes.rows, " frames");
  EnumeratedPath path;
  path.states.push_back(graph.InitialState());
  std::size_t leaves = 0;

  std::function<void(double)> dfs = [&](double prob) {
    const std::size_t t = path.pdfs.size();
    const StateId s = path.states.back();
    if (t == num_frames) {
      CHAINMMI_CHECK(++leaves <= kMaxEnumeratedPaths,
                     "more than ", kMaxEnumeratedPaths,
                     " paths; shrink the instance");
      const double f = graph.FinalProbs()[s];
      if (f > 0.0) {
        path.prob = prob * f;
        visit(static_cast<const EnumeratedPath &>(path));
      }
      return;
    }
    for (const Transition &arc : graph.ArcsFrom(s)) {
      path.states.push_back(arc.to_state);
      path.pdfs.push_back(arc.pdf_id);
      dfs(prob * arc.prob * std::exp(loglikes(t, arc.pdf_id)));
      path.states.pop_back();
      path.pdfs.pop_back();
    }
  };
  dfs(1.0);
}

inline std::vector<EnumeratedPath> EnumeratePaths(const ChainGraph &graph,
                                                  const Matrix &loglikes,
                                                  std::size_t num_frames) {
  std::vector<EnumeratedPath> paths;
  ForEachPath(graph, loglikes, num_frames,
              [&](const EnumeratedPath &p) { paths.push_back(p); });
  return paths;
}

/// ln of the total probability of all accepting paths; -inf if none.
inline double BruteLogProb(const ChainGraph &graph, const Matrix &loglikes,
                           std::size_t num_frames) {
  double total = 0.0;
  ForEachPath(graph, loglikes, num_frames,
              [&](const EnumeratedPath &p) { total += p.prob; });
  return total > 0.0 ? std::log(total)
                     : -std::numeric_limits<double>::infinity();
}

/// (num_frames, D) per-frame pdf posteriors by path-weighted counting.
inline Matrix BrutePosteriors(const ChainGraph &graph, const Matrix &loglikes,
                              std::size_t num_frames) {
  Matrix gamma(num_frames, graph.NumPdfs(), 0.0);
  double total = 0.0;
  ForEachPath(graph, loglikes, num_frames, [&](const EnumeratedPath &p) {
    total += p.prob;
    for (std::size_t t = 0; t < num_frames; ++t) gamma(t, p.pdfs[t]) += p.prob;
  });
  CHAINMMI_CHECK(total > 0.0, "graph has no accepting path of ", num_frames,
                 " frames");
  for (double &v : gamma.data) v /= total;
  return gamma;
}

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for
/// every entry of x.
inline std::vector<double> FiniteDiffGrad(
    const std::function<double(std::span<const double>)> &objective,
    std::span<const double> x, double eps = 1e-6) {
  CHAINMMI_CHECK(eps > 0.0, "finite-difference step must be > 0");
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  CHAINMMI_CHECK(std::isfinite(objective(point)),
                 "objective is not finite at the evaluation point");
  for (std::size_t i = 0; i < x.size(); ++i) {
    point[i] = x[i] + eps;
    const double up = objective(point);
    point[i] = x[i] - eps;
    const double down = objective(point);
    point[i] = x[i];
    CHAINMMI_CHECK(std::isfinite(up) && std::isfinite(down),
                   "objective is not finite around entry ", i);
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace chainmmi

#endif  // CHAINMMI_ORACLE_HPP_
