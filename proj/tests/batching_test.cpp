// tests/batching_test.cpp

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
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "chainmmi/batching.hpp"
#include "chainmmi/testing.hpp"

namespace chainmmi {
namespace {

using Sizes = std::vector<std::size_t>;

TEST(ValidBatchSizes, SortedLengths) {
  EXPECT_EQ(ValidBatchSizes(Sizes{4, 2, 2, 1}), (Sizes{4, 3, 1, 1}));
  EXPECT_EQ(ValidBatchSizes(Sizes{5}), (Sizes{1, 1, 1, 1, 1}));
  EXPECT_EQ(ValidBatchSizes(Sizes{100, 99, 98}).size(), 100u);
}

TEST(ValidBatchSizes, CardinalityProperty) {
  Rng rng(3);
  std::uniform_int_distribution<std::size_t> len(1, 40), count(1, 12);
  for (int trial = 0; trial < 500; ++trial) {
    Sizes lengths(count(rng));
    for (auto &l : lengths) l = len(rng);
    std::sort(lengths.rbegin(), lengths.rend());
    const Sizes bv = ValidBatchSizes(lengths);
    ASSERT_EQ(bv.size(), lengths[0]);
    for (std::size_t t = 0; t < bv.size(); ++t) {
      const auto expect = std::count_if(lengths.begin(), lengths.end(),
                                        [&](std::size_t l) { return l > t; });
      EXPECT_EQ(bv[t], static_cast<std::size_t>(expect));
      if (t > 0) {
        EXPECT_LE(bv[t], bv[t - 1]);
      }
    }
    EXPECT_EQ(std::accumulate(bv.begin(), bv.end(), std::size_t{0}),
              std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}));
  }
}

Matrix Filled(std::size_t rows, std::size_t cols, double base) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = base + static_cast<double>(i);
  return m;
}

TEST(MakeBatch, SortsAndPads) {
  const std::vector<Matrix> seqs = {Filled(3, 2, 0.0), Filled(7, 2, 100.0)};
  const LogLikBatch batch = MakeBatch(seqs);
  EXPECT_EQ(batch.order, (Sizes{1, 0}));
  EXPECT_EQ(batch.lengths, (Sizes{7, 3}));
  EXPECT_EQ(batch.max_frames, 7u);
  EXPECT_EQ(batch.values.size(), 2u * 7u * 2u);
  EXPECT_EQ(batch.Frame(0, 6)[1], 113.0);
  EXPECT_EQ(batch.Frame(1, 0)[0], 0.0);
  EXPECT_EQ(batch.Frame(1, 2)[1], 5.0);
  for (std::size_t t = 3; t < 7; ++t) {
    EXPECT_EQ(batch.Frame(1, t)[0], 0.0);
    EXPECT_EQ(batch.Frame(1, t)[1], 0.0);
  }
  EXPECT_EQ(batch.TotalFrames(), 10u);

  // Scatter back: item 0 of the caller is the short one.
  const std::vector<double> per_item = {70.0, 30.0};
  EXPECT_EQ(Unsort(per_item, 1, batch.order), (std::vector<double>{30.0, 70.0}));
}

TEST(MakeBatch, SingleSequence) {
  const std::vector<Matrix> seqs = {Filled(5, 3, 1.0)};
  const LogLikBatch batch = MakeBatch(seqs);
  EXPECT_EQ(batch.valid_batch_sizes, (Sizes{1, 1, 1, 1, 1}));
  EXPECT_EQ(batch.order, (Sizes{0}));
  EXPECT_EQ(batch.values, seqs[0].data);
}

TEST(MakeBatch, TiesKeepCallerOrder) {
  const std::vector<Matrix> seqs = {Filled(4, 1, 0.0), Filled(4, 1, 10.0),
                                    Filled(4, 1, 20.0)};
  const LogLikBatch batch = MakeBatch(seqs);
  EXPECT_EQ(batch.order, (Sizes{0, 1, 2}));
}

TEST(MakeBatch, UnsortInvertsSortProperty) {
  Rng rng(8);
  std::uniform_int_distribution<std::size_t> len(1, 9), count(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Matrix> seqs(count(rng));
    for (std::size_t i = 0; i < seqs.size(); ++i)
      seqs[i] = Filled(len(rng), 2, 1000.0 * static_cast<double>(i));
    const LogLikBatch batch = MakeBatch(seqs);
    // Blocks of the padded array, unsorted, reproduce the caller's data.
    const std::vector<double> unsorted =
        Unsort(batch.values, batch.max_frames * batch.num_pdfs, batch.order);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const std::size_t base = i * batch.max_frames * batch.num_pdfs;
      for (std::size_t j = 0; j < seqs[i].data.size(); ++j)
        ASSERT_EQ(unsorted[base + j], seqs[i].data[j]);
    }
    for (std::size_t k = 1; k < batch.batch_size; ++k)
      EXPECT_GE(batch.lengths[k - 1], batch.lengths[k]);
    EXPECT_EQ(std::accumulate(batch.valid_batch_sizes.begin(),
                              batch.valid_batch_sizes.end(), std::size_t{0}),
              batch.TotalFrames());
  }
}

TEST(MakeBatch, Errors) {
  EXPECT_THROW(MakeBatch(std::vector<Matrix>{}), ChainError);
  EXPECT_THROW(MakeBatch(std::vector<Matrix>{Filled(2, 2, 0.0), Filled(2, 3, 0.0)}),
               ChainError);
  EXPECT_THROW(MakeBatch(std::vector<Matrix>{Filled(0, 2, 0.0)}), ChainError);
  Matrix bad(2, 2);
  bad.data.pop_back();
  EXPECT_THROW(MakeBatch(std::vector<Matrix>{bad}), ChainError);
}

TEST(MakeBatchFromPadded, MatchesMakeBatchAndIgnoresPadding) {
  const std::vector<Matrix> seqs = {Filled(2, 2, 0.0), Filled(4, 2, 50.0),
                                    Filled(3, 2, 90.0)};
  std::vector<double> padded(3 * 4 * 2, -1e300);
  for (std::size_t i = 0; i < 3; ++i)
    std::copy(seqs[i].data.begin(), seqs[i].data.end(), padded.begin() + i * 8);
  const LogLikBatch a = MakeBatch(seqs);
  const LogLikBatch b = MakeBatchFromPadded(padded, 3, 4, 2, Sizes{2, 4, 3});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.lengths, b.lengths);
  EXPECT_THROW(MakeBatchFromPadded(padded, 3, 4, 2, Sizes{2, 5, 3}), ChainError);
  EXPECT_THROW(MakeBatchFromPadded(padded, 3, 4, 2, Sizes{2, 4}), ChainError);
  EXPECT_THROW(MakeBatchFromPadded(padded, 2, 4, 2, Sizes{2, 4}), ChainError);
}

TEST(Unsort, RejectsBadShapes) {
  const std::vector<double> v = {1.0, 2.0, 3.0};
  EXPECT_THROW(Unsort(v, 2, Sizes{0, 1}), ChainError);
  EXPECT_THROW(Unsort(v, 1, Sizes{0, 1, 3}), ChainError);
}

}  // namespace
}  // namespace chainmmi
