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

#include "rkcore/selection.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "test_support.hpp"

namespace rkcore {
namespace {

using Ids = std::vector<NodeId>;

DecompositionResult path5() {
  return rk_core(testing::graph_of(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, {"a", "b", "c", "d", "e"}));
}

DecompositionResult random_result(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::uint32_t> core(1, 5), rnd(1, 12);
  DecompositionResult r;
  for (std::size_t i = 0; i < n; ++i) {
    r.node_ids.push_back("n" + std::to_string(i));
    r.labels.push_back("0");
    r.coreness.push_back(core(rng));
    r.round.push_back(rnd(rng));
    r.rd.push_back(rnd(rng) * 3);
  }
  return r;
}

TEST(RankNodes, PathOrdering) {
  // c (RD 7), then b, d (RD 6), then a, e (RD 3).
  EXPECT_EQ(rank_nodes(path5()), (Ids{2, 1, 3, 0, 4}));
}

TEST(RankNodes, AllTiedFallsBackToIndex) {
  DecompositionResult r;
  r.node_ids = {"a", "b", "c"};
  r.labels = {"0", "0", "0"};
  r.coreness = {2, 2, 2};
  r.round = {1, 1, 1};
  r.rd = {4, 4, 4};
  EXPECT_EQ(rank_nodes(r), (Ids{0, 1, 2}));
}

TEST(RankNodes, TriangleBeforeIsolate) {
  auto r = rk_core(testing::graph_of(4, {{1, 2}, {2, 3}, {1, 3}}));
  EXPECT_EQ(rank_nodes(r), (Ids{1, 2, 3, 0}));
}

TEST(RankNodes, InvariantUnderMonotoneRdTransform) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto r = random_result(rng, 40);
    auto t = r;
    for (auto& x : t.rd) x = x * x * 7 + 3;
    EXPECT_EQ(rank_nodes(r), rank_nodes(t));
  }
}

TEST(SelectTier, FullSelection) {
  auto order = rank_nodes(path5());
  for (Tier t : kAllTiers) {
    auto s = select_tier(order, 5, t);
    EXPECT_EQ(std::set<NodeId>(s.begin(), s.end()), (std::set<NodeId>{0, 1, 2, 3, 4}));
  }
}

TEST(SelectTier, PathSingleton) {
  auto order = rank_nodes(path5());
  EXPECT_EQ(select_tier(order, 1, Tier::high), (Ids{2}));
  EXPECT_EQ(select_tier(order, 1, Tier::low), (Ids{4}));
  EXPECT_EQ(select_tier(order, 1, Tier::medium), (Ids{order[2]}));
}

TEST(SelectTier, MediumWindow) {
  Ids order{9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
  EXPECT_EQ(select_tier(order, 4, Tier::medium), (Ids{6, 5, 4, 3}));
}

TEST(SelectTier, RangeErrors) {
  Ids order{0, 1, 2};
  EXPECT_THROW(select_tier(order, 4, Tier::high), RangeError);
  EXPECT_THROW(select_tier(order, 0, Tier::low), RangeError);
}

TEST(SelectTier, ContractsOnRandomResults) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_nodes = 1 + trial % 97;
    auto r = random_result(rng, n_nodes);
    auto order = rank_nodes(r);
    std::uniform_int_distribution<std::size_t> pick(1, n_nodes);
    const std::size_t n = pick(rng);
    auto high = select_tier(order, n, Tier::high);
    auto mid = select_tier(order, n, Tier::medium);
    auto low = select_tier(order, n, Tier::low);
    EXPECT_EQ(high.size(), n);
    EXPECT_EQ(mid.size(), n);
    EXPECT_EQ(low.size(), n);
    if (3 * n <= n_nodes) {
      std::set<NodeId> all(high.begin(), high.end());
      all.insert(mid.begin(), mid.end());
      all.insert(low.begin(), low.end());
      EXPECT_EQ(all.size(), 3 * n);
    }
    if (2 * n <= n_nodes) {
      std::uint32_t min_high = UINT32_MAX, max_low = 0;
      for (auto v : high) min_high = std::min(min_high, r.coreness[v]);
      for (auto v : low) max_low = std::max(max_low, r.coreness[v]);
      EXPECT_GE(min_high, max_low);
    }
  }
}

TEST(SelectFraction, Counts) {
  EXPECT_EQ(fraction_count(0.05, 100), 5u);
  EXPECT_EQ(fraction_count(0.5, 7), 4u);
  EXPECT_EQ(fraction_count(0.07, 100), 7u);
  EXPECT_EQ(fraction_count(0.001, 10), 1u);
  EXPECT_EQ(fraction_count(1.0, 13), 13u);
  EXPECT_THROW(fraction_count(0.0, 10), RangeError);
  EXPECT_THROW(fraction_count(1.5, 10), RangeError);
}

TEST(SelectFraction, TwoClassesOfHundred) {
  std::vector<Ids> orders(2, Ids(100));
  for (auto& o : orders) std::iota(o.begin(), o.end(), NodeId{0});
  auto picked = select_fraction(orders, 0.05);
  EXPECT_EQ(picked[0].size() + picked[1].size(), 10u);
  EXPECT_EQ(picked[0], (Ids{0, 1, 2, 3, 4}));
}

TEST(SelectFraction, FullFractionSelectsEverything) {
  std::vector<Ids> orders{{3, 1, 2, 0}, {0}};
  auto picked = select_fraction(orders, 1.0);
  EXPECT_EQ(picked[0], orders[0]);
  EXPECT_EQ(picked[1], orders[1]);
}

TEST(RankAndSelect, ReportsTierOverlap) {
  std::vector<DecompositionResult> classes{path5()};
  const double fractions[] = {0.2};
  EXPECT_EQ(rank_and_select(classes, 1, fractions).tier_overlap(), 0u);
  // n = 2 of 5: High {c,b}, Medium positions 1..2 {b,d}, Low {a,e}.
  EXPECT_EQ(rank_and_select(classes, 2, fractions).tier_overlap(), 1u);
}

TEST(SubsetIo, IdLinesAndJson) {
  auto m = subset_from_id_lines("a\n b \n\nc\r\n");
  EXPECT_EQ(m.unclassed, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_THROW(subset_from_id_lines("a\na\n"), FormatError);
  auto j = subset_from_json(nlohmann::json::parse(R"({"x": ["a", "b"], "y": []})"));
  EXPECT_EQ(j.by_class.at("x").size(), 2u);
  EXPECT_EQ(subset_from_json(to_json(j)).by_class, j.by_class);
  EXPECT_THROW(subset_from_json(nlohmann::json::parse("[1, 2]")), FormatError);
}

TEST(SubsetIo, ManifestFromSelection) {
  std::vector<DecompositionResult> classes{path5()};
  std::vector<Ids> picked{{2, 1}};
  auto m = make_manifest(classes, picked);
  EXPECT_EQ(to_id_lines(m), "c\nb\n");
  EXPECT_EQ(to_json(m).dump(), R"({"0":["c","b"]})");
}

}  // namespace
}  // namespace rkcore
