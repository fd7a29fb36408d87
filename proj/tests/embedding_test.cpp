// Copyright 2026 The rkcore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rkcore/embedding.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_support.hpp"

namespace rkcore {
namespace {

using testing::TempDir;

TEST(PoolSpatial, UnitSpatialExtentIsIdentity) {
  RawFeatureTensor t(2, 3, 1, 1, {1, -2, 3, 4.5, 5, -6});
  auto m = pool_spatial(t);
  ASSERT_EQ(m.samples(), 2u);
  ASSERT_EQ(m.dim(), 3u);
  const std::vector<float> expected{1, -2, 3, 4.5f, 5, -6};
  EXPECT_EQ(m.values(), expected);
}

TEST(PoolSpatial, MeanOverFourCells) {
  RawFeatureTensor t(1, 1, 2, 2, {1, 3, 5, 7});
  auto m = pool_spatial(t);
  EXPECT_EQ(m.row(0)[0], 4.0f);
}

TEST(PoolSpatial, ConstantTensor) {
  RawFeatureTensor t(3, 4, 5, 2, std::vector<double>(3 * 4 * 5 * 2, 2.5));
  const auto m = pool_spatial(t);
  for (float v : m.values()) EXPECT_EQ(v, 2.5f);
}

TEST(PoolSpatial, NonFiniteNamesSampleAndChannel) {
  std::vector<double> v(2 * 2 * 2 * 2, 1.0);
  v[((1 * 2 + 1) * 2 + 1) * 2 + 0] = std::numeric_limits<double>::quiet_NaN();
  RawFeatureTensor t(2, 2, 2, 2, v);
  try {
    pool_spatial(t);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("sample 1, channel 1"), std::string::npos) << e.what();
  }
}

TEST(PoolSpatial, RejectsBadShape) {
  EXPECT_THROW(RawFeatureTensor(1, 1, 2, 2, {1, 2, 3}), ValidationError);
  EXPECT_THROW(RawFeatureTensor(0, 1, 1, 1, {}), ValidationError);
}

RawFeatureTensor random_tensor(std::mt19937_64& rng, std::size_t n, std::size_t c,
                               std::size_t w, std::size_t h) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n * c * w * h);
  for (auto& x : v) x = u(rng) + 2.0;  // keep rows away from zero norm
  return RawFeatureTensor(n, c, w, h, std::move(v));
}

TEST(PoolSpatial, LinearInInput) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto t1 = random_tensor(rng, 4, 3, 3, 2);
    auto t2 = random_tensor(rng, 4, 3, 3, 2);
    const double a = 0.75, b = 1.5;
    RawFeatureTensor mix = t1;
    for (std::size_t i = 0; i < mix.values.size(); ++i)
      mix.values[i] = a * t1.values[i] + b * t2.values[i];
    auto p1 = pool_spatial(t1), p2 = pool_spatial(t2), pm = pool_spatial(mix);
    for (std::size_t i = 0; i < pm.values().size(); ++i)
      EXPECT_NEAR(pm.values()[i], a * p1.values()[i] + b * p2.values()[i], 1e-5);
  }
}

TEST(PoolSpatial, PermutationEquivariantInSamples) {
  std::mt19937_64 rng(11);
  auto t = random_tensor(rng, 6, 2, 2, 3);
  auto perm = testing::random_permutation(6, rng);
  RawFeatureTensor shuffled = t;
  const std::size_t block = 2 * 2 * 3;
  for (std::size_t s = 0; s < 6; ++s)
    std::copy_n(t.values.begin() + s * block, block, shuffled.values.begin() + perm[s] * block);
  auto a = pool_spatial(t), b = pool_spatial(shuffled);
  for (std::size_t s = 0; s < 6; ++s)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(a.row(s)[c], b.row(perm[s])[c]);
}

TEST(EmbeddingMatrix, RejectsZeroNormRowWithIndex) {
  try {
    EmbeddingMatrix(2, {1, 0, 0, 0}, {"a", "b"}, {"x", "x"});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(EmbeddingMatrix, RejectsDuplicateIds) {
  EXPECT_THROW(EmbeddingMatrix(1, {1, 2}, {"a", "a"}, {"x", "x"}), ValidationError);
}

TEST(EmbeddingIo, BinaryRoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  TempDir dir;
  for (int trial = 0; trial < 10; ++trial) {
    auto m = testing::random_embeddings(1 + trial * 7, 1 + trial % 5, rng, 1 + trial % 3);
    save_embeddings(m, dir / "m.emb");
    auto back = load_embeddings(dir / "m.emb");
    EXPECT_EQ(back, m);
    for (std::size_t i = 0; i < m.values().size(); ++i)
      EXPECT_EQ(std::bit_cast<std::uint32_t>(back.values()[i]),
                std::bit_cast<std::uint32_t>(m.values()[i]));
    save_embeddings(back, dir / "again.emb");
    EXPECT_EQ(detail::read_file(dir / "m.emb"), detail::read_file(dir / "again.emb"));
  }
}

TEST(EmbeddingIo, CsvRoundTrip) {
  std::mt19937_64 rng(5);
  TempDir dir;
  auto m = testing::random_embeddings(25, 6, rng, 3);
  save_embeddings(m, dir / "m.csv");
  EXPECT_EQ(load_embeddings(dir / "m.csv"), m);
}

TEST(EmbeddingIo, DeterministicBytes) {
  std::mt19937_64 rng(9);
  TempDir dir;
  auto m = testing::random_embeddings(10, 4, rng, 2);
  save_embeddings(m, dir / "a.emb");
  save_embeddings(m, dir / "b.emb");
  EXPECT_EQ(detail::read_file(dir / "a.emb"), detail::read_file(dir / "b.emb"));
}

TEST(EmbeddingIo, LayoutMatchesDocumentedFormat) {
  EmbeddingMatrix m(2, {1.0f, -2.0f}, {"x"}, {"cat"});
  const auto bytes = encode_emb1(m);
  const std::string expected =
      std::string("EMB1") + std::string("\x01\0\0\0", 4) + std::string("\x02\0\0\0", 4) +
      std::string("\x01\0\0\0", 4) + std::string("\x03\0\0\0", 4) + "cat" +
      std::string("\0\0\0\0", 4) + std::string("\x01\0\0\0", 4) + "x" +
      std::string("\x00\x00\x80\x3f", 4) + std::string("\x00\x00\x00\xc0", 4);
  EXPECT_EQ(bytes, expected);
}

TEST(EmbeddingIo, BadMagicIsRejected) {
  auto bytes = encode_emb1(EmbeddingMatrix(1, {1.0f}, {"a"}, {"x"}));
  bytes[3] = '2';
  try {
    decode_emb1(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(EmbeddingIo, ShapeMismatchReportsOffset) {
  auto bytes = encode_emb1(EmbeddingMatrix(2, {1.0f, 2.0f}, {"a"}, {"x"}));
  bytes.resize(bytes.size() - 2);
  try {
    decode_emb1(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), bytes.size() - 6);
  }
  bytes += std::string(10, '\0');
  EXPECT_THROW(decode_emb1(bytes), FormatError);
}

TEST(EmbeddingIo, CsvWrongArityNamesLine) {
  try {
    decode_csv("id,label,f0,f1\na,x,1,2\nb,x,3\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(EmbeddingIo, CsvZeroNormRowRejected) {
  EXPECT_THROW(decode_csv("id,label,f0\na,x,1\nb,x,0\n"), ValidationError);
}

TEST(EmbeddingIo, EmptyMatrixCannotBeSaved) {
  TempDir dir;
  EXPECT_THROW(save_embeddings(EmbeddingMatrix(), dir / "e.emb"), ValidationError);
  EXPECT_THROW(save_embeddings(EmbeddingMatrix(), dir / "e.csv"), ValidationError);
}

TEST(EmbeddingIo, UnwritablePathIsIoError) {
  EmbeddingMatrix m(1, {1.0f}, {"a"}, {"x"});
  EXPECT_THROW(save_embeddings(m, "/nonexistent-dir/x.emb"), IoError);
}

TEST(EmbeddingIo, MissingFileIsIoError) {
  EXPECT_THROW(load_embeddings("/nonexistent-dir/x.emb"), IoError);
}

TEST(EmbeddingIo, PartitionByLabelKeepsRowOrder) {
  EmbeddingMatrix m(1, {1, 2, 3, 4}, {"a", "b", "c", "d"}, {"y", "x", "y", "x"});
  auto parts = partition_by_label(m);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].first, "x");
  EXPECT_EQ(parts[0].second.sample_ids(), (std::vector<std::string>{"b", "d"}));
  EXPECT_EQ(parts[1].second.sample_ids(), (std::vector<std::string>{"a", "c"}));
}

}  // namespace
}  // namespace rkcore
