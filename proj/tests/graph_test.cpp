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

#include "rkcore/graph.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

namespace rkcore {
namespace {

EmbeddingMatrix rows(std::size_t dim, std::vector<float> v) {
  std::vector<std::string> ids, labels;
  for (std::size_t i = 0; i < v.size() / dim; ++i) {
    ids.push_back(std::to_string(i));
    labels.push_back("0");
  }
  return EmbeddingMatrix(dim, std::move(v), std::move(ids), std::move(labels));
}

TEST(CosineSimilarity, HandValues) {
  EXPECT_DOUBLE_EQ(cosine_similarity({3, 4}, {3, 4}), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity({1, 0}, {0, 1}), 0.0);
  EXPECT_NEAR(cosine_similarity({1, 0}, {1, 1}), 0.7071067811865475, 1e-15);
}

TEST(CosineSimilarity, ZeroNormAndDimensionMismatch) {
  EXPECT_THROW(cosine_similarity({0, 0}, {1, 1}), DomainError);
  EXPECT_THROW(cosine_similarity({1, 0, 0}, {1, 1}), DomainError);
}

TEST(CosineSimilarity, SymmetricAndBounded) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> u(8), v(8);
    for (auto& x : u) x = normal(rng);
    for (auto& x : v) x = normal(rng);
    const double s = cosine_similarity(u, v);
    EXPECT_EQ(s, cosine_similarity(v, u));
    EXPECT_LE(std::abs(s), 1.0 + 1e-12);
  }
}

TEST(BuildGraph, EpsilonOneGivesEdgelessGraph) {
  std::mt19937_64 rng(2);
  auto m = testing::random_embeddings(30, 5, rng);
  auto g = build_graph(m, BuildConfig::absolute(1.0));
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(BuildGraph, IdenticalRowsFormTriangle) {
  auto g = build_graph(rows(2, {1, 2, 1, 2, 1, 2}), BuildConfig::absolute(0.5));
  for (NodeId v = 0; v < 3; ++v) EXPECT_EQ(g.degree(v), 2u);
}

TEST(BuildGraph, ThresholdIsStrict) {
  auto m = rows(2, {1, 0, 1, 1, 0, 1});
  EXPECT_EQ(build_graph(m, BuildConfig::absolute(0.9)).edge_count(), 0u);
  auto g = build_graph(m, BuildConfig::absolute(0.5));
  EXPECT_EQ(testing::edge_set(g), (std::set<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}}));
  // Similarity exactly at epsilon does not create an edge.
  auto same = rows(1, {1, 1});
  EXPECT_EQ(build_graph(same, BuildConfig::absolute(1.0)).edge_count(), 0u);
  EXPECT_EQ(build_graph(same, BuildConfig::absolute(0.999)).edge_count(), 1u);
}

TEST(BuildGraph, MatchesBruteForce) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = testing::random_embeddings(5 + trial, 3 + trial % 4, rng);
    for (double eps : {-0.5, 0.0, 0.2, 0.5, 0.8}) {
      auto g = build_graph(m, BuildConfig::absolute(eps));
      EXPECT_EQ(testing::edge_set(g), testing::brute_force_edges(m, eps));
    }
  }
}

TEST(BuildGraph, RelabelingCommutes) {
  std::mt19937_64 rng(6);
  auto m = testing::random_embeddings(40, 4, rng);
  auto perm = testing::random_permutation(40, rng);
  std::vector<std::size_t> inverse(40);
  for (std::size_t i = 0; i < 40; ++i) inverse[perm[i]] = i;
  auto shuffled = m.select_rows(inverse);  // row perm[i] of shuffled is row i of m
  auto g = build_graph(m, BuildConfig::absolute(0.3));
  auto h = build_graph(shuffled, BuildConfig::absolute(0.3));
  EXPECT_TRUE(g.relabeled(perm).same_structure(h));
}

TEST(BuildGraph, EdgesShrinkAsEpsilonRises) {
  std::mt19937_64 rng(8);
  auto m = testing::random_embeddings(50, 6, rng);
  std::set<std::pair<NodeId, NodeId>> previous;
  bool first = true;
  for (double eps = -0.9; eps <= 0.9; eps += 0.1) {
    auto e = testing::edge_set(build_graph(m, BuildConfig::absolute(eps)));
    if (!first) {
      EXPECT_TRUE(std::includes(previous.begin(), previous.end(), e.begin(), e.end()));
    }
    previous = std::move(e);
    first = false;
  }
}

TEST(BuildGraph, PercentileMode) {
  std::mt19937_64 rng(10);
  auto m = testing::random_embeddings(60, 8, rng);
  auto g = build_graph(m, BuildConfig::percentile(90));
  const double pairs = 60.0 * 59.0 / 2.0;
  // Roughly a tenth of all pairs survive, one fewer when a pair sits on the cut.
  EXPECT_NEAR(static_cast<double>(g.edge_count()), 0.1 * pairs, 2.0);
  EXPECT_EQ(testing::edge_set(g), testing::brute_force_edges(m, g.epsilon()));
}

TEST(BuildGraph, PercentileLinearInterpolation) {
  EXPECT_DOUBLE_EQ(detail::percentile_of({1, 2, 3, 4, 5}, 50), 3.0);
  EXPECT_DOUBLE_EQ(detail::percentile_of({4, 1, 3, 2}, 50), 2.5);
  EXPECT_DOUBLE_EQ(detail::percentile_of({10, 20}, 25), 12.5);
}

TEST(BuildGraph, PercentileNeedsTwoSamples) {
  EXPECT_THROW(build_graph(rows(1, {1}), BuildConfig::percentile(50)), ConfigError);
}

TEST(BuildConfig, RangeChecks) {
  EXPECT_THROW(BuildConfig::absolute(1.5), ConfigError);
  EXPECT_THROW(BuildConfig::absolute(std::nan("")), ConfigError);
  EXPECT_THROW(BuildConfig::percentile(0), ConfigError);
  EXPECT_THROW(BuildConfig::percentile(100), ConfigError);
  EXPECT_NO_THROW(BuildConfig::absolute(-1.0));
}

TEST(BuildGraph, PerClassGraphs) {
  EmbeddingMatrix m(2, {1, 0, 1, 0.1f, 0, 1, 0.1f, 1}, {"a", "b", "c", "d"},
                    {"x", "x", "y", "y"});
  auto graphs = build_class_graphs(m, BuildConfig::absolute(0.9));
  ASSERT_EQ(graphs.size(), 2u);
  EXPECT_EQ(graphs[0].label, "x");
  EXPECT_EQ(graphs[0].graph.edge_count(), 1u);
  EXPECT_EQ(graphs[1].graph.sample_ids(), (std::vector<std::string>{"c", "d"}));
}

TEST(SimilarityGraph, RejectsMalformedAdjacency) {
  auto ids = std::vector<std::string>{"a", "b"};
  auto labels = std::vector<std::string>{"0", "0"};
  EXPECT_THROW(SimilarityGraph({{1}, {}}, ids, labels), ValidationError);      // asymmetric
  EXPECT_THROW(SimilarityGraph({{0}, {}}, ids, labels), ValidationError);      // self-loop
  EXPECT_THROW(SimilarityGraph({{1, 1}, {0}}, ids, labels), ValidationError);  // duplicate
  EXPECT_THROW(SimilarityGraph({{2}, {}}, ids, labels), ValidationError);      // range
}

TEST(SimilarityGraph, EdgeListAndJsonInterchange) {
  std::mt19937_64 rng(12);
  auto g = testing::random_graph(30, 0.2, rng);
  const auto text = to_edge_list(g);
  for (auto line : detail::lines(text)) {
    auto f = detail::split(line, ' ');
    ASSERT_EQ(f.size(), 2u);
    NodeId u = 0, v = 0;
    ASSERT_TRUE(detail::parse_number(f[0], u) && detail::parse_number(f[1], v));
    EXPECT_LT(u, v);
  }
  EXPECT_TRUE(parse_edge_list(text, 30).same_structure(g));
  auto back = graph_from_json(nlohmann::json::parse(to_json(g).dump()));
  EXPECT_TRUE(back.same_structure(g));
  EXPECT_EQ(back.sample_ids(), g.sample_ids());
}

}  // namespace
}  // namespace rkcore
