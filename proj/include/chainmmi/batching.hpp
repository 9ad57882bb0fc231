// chainmmi/batching.hpp

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

#ifndef CHAINMMI_BATCHING_HPP_
#define CHAINMMI_BATCHING_HPP_

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "chainmmi/common.hpp"

namespace chainmmi {

/// Row-major (rows, cols) matrix of doubles; one utterance's (T, D)
/// log-likelihoods.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Sorted, right-padded (B, T_max, D) log-likelihoods.  Items are ordered by
/// non-increasing length; order[k] is the caller's index of sorted item k.
struct LogLikBatch {
  std::size_t batch_size = 0;
  std::size_t max_frames = 0;
  std::size_t num_pdfs = 0;
  std::vector<double> values;
  std::vector<std::size_t> lengths;
  /// valid_batch_sizes[t] = number of items with lengths[b] > t.
  std::vector<std::size_t> valid_batch_sizes;
  std::vector<std::size_t> order;

  std::size_t Offset(std::size_t b, std::size_t t) const {
    return (b * max_frames + t) * num_pdfs;
  }
  std::span<const double> Frame(std::size_t b, std::size_t t) const {
    return std::span<const double>(values).subspan(Offset(b, t), num_pdfs);
  }
  std::span<double> Frame(std::size_t b, std::size_t t) {
    return std::span<double>(values).subspan(Offset(b, t), num_pdfs);
  }
  std::size_t TotalFrames() const {
    return std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  }
};

/// B_v for lengths already sorted in non-increasing order.
inline std::vector<std::size_t> ValidBatchSizes(
    std::span<const std::size_t> sorted_lengths) {
  const std::size_t tmax = sorted_lengths.empty() ? 0 : sorted_lengths[0];
  std::vector<std::size_t> bv(tmax, 0);
  std::size_t b = sorted_lengths.size();
  for (std::size_t t = 0; t < tmax; ++t) {
    while (b > 0 && sorted_lengths[b - 1] <= t) --b;
    bv[t] = b;
  }
  return bv;
}

namespace detail {

// Stable descending sort of lengths; ties keep caller order.
inline std::vector<std::size_t> SortOrder(std::span<const std::size_t> lengths) {
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return lengths[a] > lengths[b];
                   });
  return order;
}

inline LogLikBatch EmptyBatch(std::span<const std::size_t> lengths,
                              std::size_t num_pdfs) {
  CHAINMMI_CHECK(!lengths.empty(), "cannot batch an empty list of sequences");
  CHAINMMI_CHECK(num_pdfs > 0, "sequences must have at least one pdf column");
  for (std::size_t i = 0; i < lengths.size(); ++i)
    CHAINMMI_CHECK(lengths[i] >= 1, "sequence ", i, " has zero frames");
  LogLikBatch batch;
  batch.batch_size = lengths.size();
  batch.num_pdfs = num_pdfs;
  batch.order = SortOrder(lengths);
  for (std::size_t k : batch.order) batch.lengths.push_back(lengths[k]);
  batch.max_frames = batch.lengths[0];
  batch.valid_batch_sizes = ValidBatchSizes(batch.lengths);
  batch.values.assign(batch.batch_size * batch.max_frames * num_pdfs, 0.0);
  return batch;
}

}  // namespace detail

/// Sorts by length (stable, descending) and zero-pads to the right.
inline LogLikBatch MakeBatch(std::span<const Matrix> sequences) {
  CHAINMMI_CHECK(!sequences.empty(), "cannot batch an empty list of sequences");
  const std::size_t d = sequences[0].cols;
  std::vector<std::size_t> lengths;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    CHAINMMI_CHECK(sequences[i].cols == d, "sequence ", i, " has ",
                   sequences[i].cols, " pdf columns, sequence 0 has ", d);
    CHAINMMI_CHECK(sequences[i].data.size() == sequences[i].rows * d,
                   "sequence ", i, " data size does not match its shape");
    lengths.push_back(sequences[i].rows);
  }
  LogLikBatch batch = detail::EmptyBatch(lengths, d);
  for (std::size_t k = 0; k < batch.batch_size; ++k) {
    const Matrix &m = sequences[batch.order[k]];
    std::copy(m.data.begin(), m.data.end(),
              batch.values.begin() +
                  static_cast<std::ptrdiff_t>(batch.Offset(k, 0)));
  }
  return batch;
}

/// Same as MakeBatch, from an already padded (B, T, D) array in caller order
/// plus per-item lengths.  Cells beyond each length are not copied.
inline LogLikBatch MakeBatchFromPadded(std::span<const double> values,
                                       std::size_t batch_size,
                                       std::size_t max_frames,
                                       std::size_t num_pdfs,
                                       std::span<const std::size_t> lengths) {
  CHAINMMI_CHECK(values.size() == batch_size * max_frames * num_pdfs,
                 "padded array has ", values.size(), " values, expected ",
                 batch_size * max_frames * num_pdfs);
  CHAINMMI_CHECK(lengths.size() == batch_size, "got ", lengths.size(),
                 " lengths for a batch of ", batch_size);
  for (std::size_t i = 0; i < lengths.size(); ++i)
    CHAINMMI_CHECK(lengths[i] <= max_frames, "length ", lengths[i],
                   " of item ", i, " exceeds padded size ", max_frames);
  LogLikBatch batch = detail::EmptyBatch(lengths, num_pdfs);
  for (std::size_t k = 0; k < batch_size; ++k) {
    const std::size_t src = batch.order[k] * max_frames * num_pdfs;
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(src),
                batch.lengths[k] * num_pdfs,
                batch.values.begin() +
                    static_cast<std::ptrdiff_t>(batch.Offset(k, 0)));
  }
  return batch;
}

/// Undoes the batch sort along the leading axis.  `values` holds
/// order.size() blocks of `block` elements in sorted order.
template <typename T>
std::vector<T> Unsort(std::span<const T> values, std::size_t block,
                      std::span<const std::size_t> order) {
  CHAINMMI_CHECK(values.size() == order.size() * block, "unsort: ",
                 values.size(), " values do not form ", order.size(),
                 " blocks of ", block);
  std::vector<T> out(values.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    CHAINMMI_CHECK(order[k] < order.size(), "unsort: invalid order map");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(k * block), block,
                out.begin() + static_cast<std::ptrdiff_t>(order[k] * block));
  }
  return out;
}

template <typename T>
std::vector<T> Unsort(const std::vector<T> &values, std::size_t block,
                      std::span<const std::size_t> order) {
  return Unsort(std::span<const T>(values), block, order);
}

}  // namespace chainmmi

#endif  // CHAINMMI_BATCHING_HPP_
