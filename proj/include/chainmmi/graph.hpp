// chainmmi/graph.hpp

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

#ifndef CHAINMMI_GRAPH_HPP_
#define CHAINMMI_GRAPH_HPP_

// Sparse HMM graphs in coordinate-list form.  A graph stores every arc twice:
// once sorted by source state (used by the backward pass and by anything
// that walks successors) and once sorted by destination state (used by the
// forward pass).  Each layout has a per-state half-open row range so a
// state's arcs are found without search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "chainmmi/common.hpp"

namespace chainmmi {

struct Transition {
  StateId from_state = 0;
  StateId to_state = 0;
  PdfId pdf_id = 0;
  double prob = 0.0;

  friend bool operator==(const Transition &, const Transition &) = default;
};

/// Half-open row range [begin, end) into a transition list.
struct IndexRange {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  std::uint32_t size() const { return end - begin; }
  friend bool operator==(const IndexRange &, const IndexRange &) = default;
};

class ChainGraph {
 public:
  /// Validates and indexes a graph.  Zero-probability arcs are dropped (see
  /// NumDroppedArcs()); every other invariant violation throws ChainError.
  /// The result does not depend on the order of `transitions`.
  static ChainGraph Build(std::vector<Transition> transitions,
                          StateId num_states, PdfId num_pdfs,
                          StateId initial_state,
                          std::vector<double> final_probs);

  StateId NumStates() const { return num_states_; }
  PdfId NumPdfs() const { return num_pdfs_; }
  std::uint32_t NumTransitions() const {
    return static_cast<std::uint32_t>(forward_.size());
  }
  StateId InitialState() const { return initial_state_; }
  std::size_t NumDroppedArcs() const { return num_dropped_; }

  std::span<const Transition> ForwardTransitions() const { return forward_; }
  std::span<const IndexRange> ForwardIndex() const { return forward_index_; }
  std::span<const Transition> BackwardTransitions() const { return backward_; }
  std::span<const IndexRange> BackwardIndex() const { return backward_index_; }
  std::span<const double> FinalProbs() const { return final_probs_; }

  /// Arcs leaving `s`, in forward-layout order.
  std::span<const Transition> ArcsFrom(StateId s) const {
    const IndexRange r = forward_index_[s];
    return std::span<const Transition>(forward_).subspan(r.begin, r.size());
  }
  /// Arcs entering `s`, in backward-layout order.
  std::span<const Transition> ArcsInto(StateId s) const {
    const IndexRange r = backward_index_[s];
    return std::span<const Transition>(backward_).subspan(r.begin, r.size());
  }

  /// One-line human readable construction summary.
  std::string Summary() const {
    return "states=" + std::to_string(num_states_) +
           " transitions=" + std::to_string(forward_.size()) +
           " pdfs=" + std::to_string(num_pdfs_) +
           " dropped_zero_prob_arcs=" + std::to_string(num_dropped_);
  }

  friend bool operator==(const ChainGraph &, const ChainGraph &) = default;

 private:
  ChainGraph() = default;

  StateId num_states_ = 0;
  PdfId num_pdfs_ = 0;
  StateId initial_state_ = 0;
  std::size_t num_dropped_ = 0;
  std::vector<Transition> forward_;
  std::vector<IndexRange> forward_index_;
  std::vector<Transition> backward_;
  std::vector<IndexRange> backward_index_;
  std::vector<double> final_probs_;
};

namespace detail {

// Rows of `sorted` are grouped by key(t); builds one range per state.
template <typename KeyFn>
std::vector<IndexRange> BuildIndex(const std::vector<Transition> &sorted,
                                   StateId num_states, KeyFn key) {
  std::vector<IndexRange> index(num_states);
  std::uint32_t row = 0;
  const auto n = static_cast<std::uint32_t>(sorted.size());
  for (StateId s = 0; s < num_states; ++s) {
    index[s].begin = row;
    while (row < n && key(sorted[row]) == s) ++row;
    index[s].end = row;
  }
  return index;
}

}  // namespace detail

inline ChainGraph ChainGraph::Build(std::vector<Transition> transitions,
                                    StateId num_states, PdfId num_pdfs,
                                    StateId initial_state,
                                    std::vector<double> final_probs) {
  CHAINMMI_CHECK(num_states > 0, "graph must have at least one state");
  CHAINMMI_CHECK(num_pdfs > 0, "graph must have at least one pdf");
  CHAINMMI_CHECK(initial_state < num_states, "initial state ", initial_state,
                 " out of range (num_states=", num_states, ")");
  CHAINMMI_CHECK(final_probs.size() == num_states, "final_probs has ",
                 final_probs.size(), " entries, expected ", num_states);
  CHAINMMI_CHECK(transitions.size() < UINT32_MAX, "too many transitions");

  bool any_final = false;
  for (StateId s = 0; s < num_states; ++s) {
    const double f = final_probs[s];
    CHAINMMI_CHECK(std::isfinite(f) && f >= 0.0 && f <= 1.0,
                   "final probability of state ", s, " is ", f,
                   ", expected a value in [0, 1]");
    any_final = any_final || f > 0.0;
  }
  CHAINMMI_CHECK(any_final, "graph has no state with final probability > 0");

  ChainGraph g;
  g.num_states_ = num_states;
  g.num_pdfs_ = num_pdfs;
  g.initial_state_ = initial_state;
  g.final_probs_ = std::move(final_probs);

  std::vector<Transition> kept;
  kept.reserve(transitions.size());
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const Transition &t = transitions[i];
    CHAINMMI_CHECK(t.from_state < num_states && t.to_state < num_states,
                   "transition ", i, " (", t.from_state, " -> ", t.to_state,
                   ") references a state >= ", num_states);
    CHAINMMI_CHECK(t.pdf_id < num_pdfs, "transition ", i, " has pdf-id ",
                   t.pdf_id, " >= num_pdfs ", num_pdfs);
    CHAINMMI_CHECK(std::isfinite(t.prob) && t.prob >= 0.0 && t.prob <= 1.0,
                   "transition ", i, " has probability ", t.prob,
                   ", expected a value in [0, 1]");
    if (t.prob == 0.0) {
      ++g.num_dropped_;
      continue;
    }
    kept.push_back(t);
  }

  // Full-key sorts make the layout canonical: any permutation of the input
  // yields the same graph.
  g.forward_ = kept;
  std::sort(g.forward_.begin(), g.forward_.end(),
            [](const Transition &a, const Transition &b) {
              return std::tie(a.from_state, a.to_state, a.pdf_id, a.prob) <
                     std::tie(b.from_state, b.to_state, b.pdf_id, b.prob);
            });
  g.backward_ = std::move(kept);
  std::sort(g.backward_.begin(), g.backward_.end(),
            [](const Transition &a, const Transition &b) {
              return std::tie(a.to_state, a.from_state, a.pdf_id, a.prob) <
                     std::tie(b.to_state, b.from_state, b.pdf_id, b.prob);
            });
  g.forward_index_ = detail::BuildIndex(
      g.forward_, num_states, [](const Transition &t) { return t.from_state; });
  g.backward_index_ = detail::BuildIndex(
      g.backward_, num_states, [](const Transition &t) { return t.to_state; });

  // Accessibility from the initial state.
  std::vector<char> seen(num_states, 0);
  std::vector<StateId> stack{initial_state};
  seen[initial_state] = 1;
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    for (const Transition &t : g.ArcsFrom(s)) {
      if (!seen[t.to_state]) {
        seen[t.to_state] = 1;
        stack.push_back(t.to_state);
      }
    }
  }
  for (StateId s = 0; s < num_states; ++s)
    CHAINMMI_CHECK(seen[s], "state ", s,
                   " is not reachable from the initial state ", initial_state);

  // Co-accessibility to some final state.
  std::fill(seen.begin(), seen.end(), 0);
  for (StateId s = 0; s < num_states; ++s) {
    if (g.final_probs_[s] > 0.0) {
      seen[s] = 1;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    for (const Transition &t : g.ArcsInto(s)) {
      if (!seen[t.from_state]) {
        seen[t.from_state] = 1;
        stack.push_back(t.from_state);
      }
    }
  }
  for (StateId s = 0; s < num_states; ++s)
    CHAINMMI_CHECK(seen[s], "state ", s, " cannot reach any final state");

  return g;
}

/// Read-only view of one item of a ChainGraphBatch, expressed over the
/// padded flat arrays.  Transition rows are (from, to, pdf) triples.
struct GraphView {
  StateId num_states = 0;
  std::uint32_t num_transitions = 0;
  StateId initial_state = 0;
  std::span<const std::uint32_t> forward_transitions;   // I_max * 3
  std::span<const double> forward_probs;                // I_max
  std::span<const std::uint32_t> forward_index;         // S_max * 2
  std::span<const std::uint32_t> backward_transitions;  // I_max * 3
  std::span<const double> backward_probs;               // I_max
  std::span<const std::uint32_t> backward_index;        // S_max * 2
  std::span<const double> final_probs;                  // S_max
};

/// A batch of graphs laid out as zero-padded (B, I_max, 3), (B, I_max),
/// (B, S_max, 2) and (B, S_max) arrays.  A broadcast batch stores a single
/// physical item and maps every logical index onto it.
class ChainGraphBatch {
 public:
  std::size_t BatchSize() const { return batch_size_; }
  bool IsBroadcast() const { return broadcast_; }
  PdfId NumPdfs() const { return num_pdfs_; }
  StateId MaxStates() const { return max_states_; }
  std::uint32_t MaxTransitions() const { return max_transitions_; }
  /// Number of graphs physically stored (1 for a broadcast batch).
  std::size_t NumStored() const { return graphs_.size(); }

  const ChainGraph &Graph(std::size_t b) const { return graphs_[Slot(b)]; }

  GraphView View(std::size_t b) const {
    const std::size_t k = Slot(b);
    const std::size_t imax = max_transitions_, smax = max_states_;
    GraphView v;
    v.num_states = graphs_[k].NumStates();
    v.num_transitions = graphs_[k].NumTransitions();
    v.initial_state = graphs_[k].InitialState();
    v.forward_transitions = Sub(forward_transitions_, k * imax * 3, imax * 3);
    v.forward_probs = Sub(forward_probs_, k * imax, imax);
    v.forward_index = Sub(forward_index_, k * smax * 2, smax * 2);
    v.backward_transitions = Sub(backward_transitions_, k * imax * 3, imax * 3);
    v.backward_probs = Sub(backward_probs_, k * imax, imax);
    v.backward_index = Sub(backward_index_, k * smax * 2, smax * 2);
    v.final_probs = Sub(final_probs_, k * smax, smax);
    return v;
  }

  // Raw padded storage, row-major over the stored items.
  std::span<const std::uint32_t> ForwardTransitionsData() const { return forward_transitions_; }
  std::span<const double> ForwardProbsData() const { return forward_probs_; }
  std::span<const std::uint32_t> ForwardIndexData() const { return forward_index_; }
  std::span<const std::uint32_t> BackwardTransitionsData() const { return backward_transitions_; }
  std::span<const double> BackwardProbsData() const { return backward_probs_; }
  std::span<const std::uint32_t> BackwardIndexData() const { return backward_index_; }
  std::span<const double> FinalProbsData() const { return final_probs_; }

  friend ChainGraphBatch BatchGraphs(std::vector<ChainGraph> graphs);
  friend ChainGraphBatch BroadcastGraph(ChainGraph graph, std::size_t batch_size);

 private:
  ChainGraphBatch() = default;

  std::size_t Slot(std::size_t b) const {
    CHAINMMI_CHECK(b < batch_size_, "batch index ", b, " out of range (B=",
                   batch_size_, ")");
    return broadcast_ ? 0 : b;
  }
  template <typename T>
  static std::span<const T> Sub(const std::vector<T> &v, std::size_t off,
                                std::size_t n) {
    return std::span<const T>(v).subspan(off, n);
  }

  void Layout();

  std::size_t batch_size_ = 0;
  bool broadcast_ = false;
  PdfId num_pdfs_ = 0;
  StateId max_states_ = 0;
  std::uint32_t max_transitions_ = 0;
  std::vector<ChainGraph> graphs_;
  std::vector<std::uint32_t> forward_transitions_;
  std::vector<double> forward_probs_;
  std::vector<std::uint32_t> forward_index_;
  std::vector<std::uint32_t> backward_transitions_;
  std::vector<double> backward_probs_;
  std::vector<std::uint32_t> backward_index_;
  std::vector<double> final_probs_;
};

inline void ChainGraphBatch::Layout() {
  max_states_ = 0;
  max_transitions_ = 0;
  for (const ChainGraph &g : graphs_) {
    max_states_ = std::max(max_states_, g.NumStates());
    max_transitions_ = std::max(max_transitions_, g.NumTransitions());
  }
  const std::size_t n = graphs_.size(), imax = max_transitions_,
                    smax = max_states_;
  forward_transitions_.assign(n * imax * 3, 0);
  forward_probs_.assign(n * imax, 0.0);
  forward_index_.assign(n * smax * 2, 0);
  backward_transitions_.assign(n * imax * 3, 0);
  backward_probs_.assign(n * imax, 0.0);
  backward_index_.assign(n * smax * 2, 0);
  final_probs_.assign(n * smax, 0.0);

  auto copy_layout = [imax, smax](std::size_t k,
                                  std::span<const Transition> arcs,
                                  std::span<const IndexRange> index,
                                  std::vector<std::uint32_t> &trans,
                                  std::vector<double> &probs,
                                  std::vector<std::uint32_t> &ranges) {
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      trans[(k * imax + i) * 3 + 0] = arcs[i].from_state;
      trans[(k * imax + i) * 3 + 1] = arcs[i].to_state;
      trans[(k * imax + i) * 3 + 2] = arcs[i].pdf_id;
      probs[k * imax + i] = arcs[i].prob;
    }
    // Ranges of padded states stay (0, 0), i.e. empty.
    for (std::size_t s = 0; s < index.size(); ++s) {
      ranges[(k * smax + s) * 2 + 0] = index[s].begin;
      ranges[(k * smax + s) * 2 + 1] = index[s].end;
    }
  };
  for (std::size_t k = 0; k < n; ++k) {
    const ChainGraph &g = graphs_[k];
    copy_layout(k, g.ForwardTransitions(), g.ForwardIndex(),
                forward_transitions_, forward_probs_, forward_index_);
    copy_layout(k, g.BackwardTransitions(), g.BackwardIndex(),
                backward_transitions_, backward_probs_, backward_index_);
    std::copy(g.FinalProbs().begin(), g.FinalProbs().end(),
              final_probs_.begin() + static_cast<std::ptrdiff_t>(k * smax));
  }
}

/// Per-item batch (numerators).  All graphs must agree on num_pdfs.
inline ChainGraphBatch BatchGraphs(std::vector<ChainGraph> graphs) {
  CHAINMMI_CHECK(!graphs.empty(), "cannot batch an empty list of graphs");
  const PdfId d = graphs.front().NumPdfs();
  for (std::size_t b = 1; b < graphs.size(); ++b)
    CHAINMMI_CHECK(graphs[b].NumPdfs() == d, "graph ", b, " has ",
                   graphs[b].NumPdfs(), " pdfs, graph 0 has ", d);
  ChainGraphBatch batch;
  batch.batch_size_ = graphs.size();
  batch.broadcast_ = false;
  batch.num_pdfs_ = d;
  batch.graphs_ = std::move(graphs);
  batch.Layout();
  return batch;
}

/// One graph shared by `batch_size` logical items (denominator).
inline ChainGraphBatch BroadcastGraph(ChainGraph graph, std::size_t batch_size) {
  CHAINMMI_CHECK(batch_size >= 1, "broadcast batch size must be >= 1");
  ChainGraphBatch batch;
  batch.batch_size_ = batch_size;
  batch.broadcast_ = true;
  batch.num_pdfs_ = graph.NumPdfs();
  batch.graphs_.push_back(std::move(graph));
  batch.Layout();
  return batch;
}

}  // namespace chainmmi

#endif  // CHAINMMI_GRAPH_HPP_
