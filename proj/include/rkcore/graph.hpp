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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rkcore/detail/io.hpp"
#include "rkcore/embedding.hpp"
#include "rkcore/error.hpp"

namespace rkcore {

using NodeId = std::uint32_t;

// Simple undirected graph in compressed sorted adjacency form. Node i
// corresponds to sample_ids()[i]; neighbor lists are ascending, free of
// duplicates and self-loops, and symmetric.
class SimilarityGraph {
 public:
  SimilarityGraph() = default;

  SimilarityGraph(std::vector<std::vector<NodeId>> adjacency,
                  std::vector<std::string> sample_ids, std::vector<std::string> labels,
                  double epsilon = std::numeric_limits<double>::quiet_NaN())
      : ids_(std::move(sample_ids)), labels_(std::move(labels)), epsilon_(epsilon) {
    const std::size_t n = adjacency.size();
    if (ids_.size() != n || labels_.size() != n)
      throw ValidationError("graph node metadata does not match node count " +
                            std::to_string(n));
    offsets_.reserve(n + 1);
    for (std::size_t v = 0; v < n; ++v) {
      const auto& adj = adjacency[v];
      for (std::size_t k = 0; k < adj.size(); ++k) {
        if (adj[k] >= n)
          throw ValidationError("node " + std::to_string(v) + " has out-of-range neighbor " +
                                std::to_string(adj[k]));
        if (adj[k] == v)
          throw ValidationError("self-loop at node " + std::to_string(v));
        if (k > 0 && adj[k] <= adj[k - 1])
          throw ValidationError("neighbor list of node " + std::to_string(v) +
                                " is not strictly ascending");
      }
      neighbors_.insert(neighbors_.end(), adj.begin(), adj.end());
      offsets_.push_back(neighbors_.size());
    }
    for (NodeId v = 0; v < n; ++v)
      for (NodeId w : neighbors(v))
        if (!has_edge(w, v))
          throw ValidationError("asymmetric edge " + std::to_string(v) + " -> " +
                                std::to_string(w));
  }

  // Builds from an unordered edge list; duplicates and orientation are
  // normalized, self-loops rejected.
  static SimilarityGraph from_edges(std::size_t n,
                                    std::span<const std::pair<NodeId, NodeId>> edges,
                                    std::vector<std::string> sample_ids = {},
                                    std::vector<std::string> labels = {}) {
    std::vector<std::vector<NodeId>> adj(n);
    for (auto [u, v] : edges) {
      if (u >= n || v >= n)
        throw ValidationError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") references a node outside [0, " + std::to_string(n) + ")");
      if (u == v) throw ValidationError("self-loop at node " + std::to_string(u));
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    for (auto& a : adj) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    if (sample_ids.empty())
      for (std::size_t i = 0; i < n; ++i) sample_ids.push_back(std::to_string(i));
    if (labels.empty()) labels.assign(n, "0");
    return SimilarityGraph(std::move(adj), std::move(sample_ids), std::move(labels));
  }

  std::size_t node_count() const noexcept { return ids_.size(); }
  std::size_t edge_count() const noexcept { return neighbors_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  bool has_edge(NodeId u, NodeId v) const {
    auto adj = neighbors(u);
    return std::binary_search(adj.begin(), adj.end(), v);
  }

  const std::vector<std::string>& sample_ids() const noexcept { return ids_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  // Threshold the graph was built with; NaN when unknown.
  double epsilon() const noexcept { return epsilon_; }

  // All edges (u, v) with u < v in lexicographic order.
  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(edge_count());
    for (NodeId u = 0; u < node_count(); ++u)
      for (NodeId v : neighbors(u))
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  std::vector<std::vector<NodeId>> adjacency_lists() const {
    std::vector<std::vector<NodeId>> out(node_count());
    for (NodeId v = 0; v < node_count(); ++v) {
      auto adj = neighbors(v);
      out[v].assign(adj.begin(), adj.end());
    }
    return out;
  }

  // Same graph with node i moved to position perm[i].
  SimilarityGraph relabeled(std::span<const NodeId> perm) const {
    const std::size_t n = node_count();
    if (perm.size() != n) throw ValidationError("permutation size mismatch");
    std::vector<std::vector<NodeId>> adj(n);
    std::vector<std::string> ids(n), labels(n);
    for (NodeId v = 0; v < n; ++v) {
      ids[perm[v]] = ids_[v];
      labels[perm[v]] = labels_[v];
      for (NodeId w : neighbors(v)) adj[perm[v]].push_back(perm[w]);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return SimilarityGraph(std::move(adj), std::move(ids), std::move(labels), epsilon_);
  }

  bool same_structure(const SimilarityGraph& other) const {
    return offsets_ == other.offsets_ && neighbors_ == other.neighbors_;
  }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
  std::vector<std::string> ids_;
  std::vector<std::string> labels_;
  double epsilon_ = std::numeric_limits<double>::quiet_NaN();
};

// Threshold selection: either an absolute epsilon or the p-th percentile of
// all off-diagonal pairwise similarities.
class BuildConfig {
 public:
  static BuildConfig absolute(double epsilon) {
    if (!(epsilon >= -1.0 && epsilon <= 1.0))
      throw ConfigError("epsilon must lie in [-1, 1], got " + detail::format_real(epsilon));
    return BuildConfig(epsilon, false);
  }

  static BuildConfig percentile(double p) {
    if (!(p > 0.0 && p < 100.0))
      throw ConfigError("epsilon percentile must lie in (0, 100), got " +
                        detail::format_real(p));
    return BuildConfig(p, true);
  }

  bool is_percentile() const noexcept { return percentile_; }
  double value() const noexcept { return value_; }

 private:
  BuildConfig(double v, bool pct) : value_(v), percentile_(pct) {}

  double value_;
  bool percentile_;
};

template <typename T>
double cosine_similarity(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size())
    throw DomainError("cosine similarity of vectors with dimensions " +
                      std::to_string(u.size()) + " and " + std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine similarity of a zero-norm vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
  return cosine_similarity(std::span<const double>(u), std::span<const double>(v));
}

namespace detail {

// Widened rows and their norms; pair similarity uses the same arithmetic as
// cosine_similarity so both agree bit for bit.
class PairwiseCosine {
 public:
  explicit PairwiseCosine(const EmbeddingMatrix& m)
      : n_(m.samples()), dim_(m.dim()), rows_(m.values().begin(), m.values().end()),
        norms_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) s += rows_[i * dim_ + c] * rows_[i * dim_ + c];
      norms_[i] = std::sqrt(s);
    }
  }

  double operator()(std::size_t a, std::size_t b) const {
    const double* x = rows_.data() + a * dim_;
    const double* y = rows_.data() + b * dim_;
    double dot = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) dot += x[c] * y[c];
    return dot / (norms_[a] * norms_[b]);
  }

  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_, dim_;
  std::vector<double> rows_;
  std::vector<double> norms_;
};

// Linear interpolation between closest ranks.
inline double percentile_of(std::vector<double> values, double p) {
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return a;
  const double b = *std::min_element(values.begin() + lo + 1, values.end());
  return a + frac * (b - a);
}

}  // namespace detail

// The threshold build_graph would apply for this input.
inline double resolve_epsilon(const EmbeddingMatrix& m, const BuildConfig& config) {
  if (!config.is_percentile()) return config.value();
  if (m.samples() < 2)
    throw ConfigError("percentile thresholds need at least 2 samples, got " +
                      std::to_string(m.samples()));
  detail::PairwiseCosine sim(m);
  std::vector<double> all;
  all.reserve(m.samples() * (m.samples() - 1) / 2);
  for (std::size_t a = 0; a < m.samples(); ++a)
    for (std::size_t b = a + 1; b < m.samples(); ++b) all.push_back(sim(a, b));
  return detail::percentile_of(std::move(all), config.value());
}

// Edge (a, b) exists iff cos(r_a, r_b) > epsilon, strictly. Self-pairs are
// never evaluated.
inline SimilarityGraph build_graph(const EmbeddingMatrix& m, const BuildConfig& config) {
  const double epsilon = resolve_epsilon(m, config);
  detail::PairwiseCosine sim(m);
  const std::size_t n = m.samples();
  std::vector<std::vector<NodeId>> adj(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (sim(a, b) > epsilon) {
        adj[a].push_back(static_cast<NodeId>(b));
        adj[b].push_back(static_cast<NodeId>(a));
      }
  // Lists are already ascending: a's list receives b in increasing order and
  // b's list receives a in increasing order of a.
  return SimilarityGraph(std::move(adj), m.sample_ids(), m.labels(), epsilon);
}

struct ClassGraph {
  std::string label;
  SimilarityGraph graph;
};

// One graph per class label, ascending label order. Percentile thresholds
// are resolved independently per class.
inline std::vector<ClassGraph> build_class_graphs(const EmbeddingMatrix& m,
                                                  const BuildConfig& config) {
  std::vector<ClassGraph> out;
  for (auto& [label, part] : partition_by_label(m))
    out.push_back({label, build_graph(part, config)});
  return out;
}

inline std::string to_edge_list(const SimilarityGraph& g) {
  std::string out;
  for (auto [u, v] : g.edges()) {
    out += std::to_string(u);
    out += ' ';
    out += std::to_string(v);
    out += '\n';
  }
  return out;
}

// Node count is taken as one past the largest endpoint unless given.
inline SimilarityGraph parse_edge_list(std::string_view text,
                                       std::optional<std::size_t> node_count = {}) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::size_t n = 0;
  auto rows = detail::lines(text);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto line = detail::trim(rows[r]);
    if (line.empty() || line.front() == '#') continue;
    auto fields = detail::split(line, ' ');
    NodeId u = 0, v = 0;
    if (fields.size() != 2 || !detail::parse_number(fields[0], u) ||
        !detail::parse_number(fields[1], v))
      throw FormatError("line " + std::to_string(r + 1) + ": expected 'u v'", r + 1);
    edges.emplace_back(u, v);
    n = std::max<std::size_t>(n, std::max(u, v) + 1);
  }
  if (node_count) {
    if (*node_count < n)
      throw FormatError("edge list references node " + std::to_string(n - 1) +
                            " beyond node count " + std::to_string(*node_count),
                        0);
    n = *node_count;
  }
  return SimilarityGraph::from_edges(n, edges);
}

inline nlohmann::json to_json(const SimilarityGraph& g) {
  nlohmann::json j;
  j["node_ids"] = g.sample_ids();
  j["labels"] = g.labels();
  j["adjacency"] = g.adjacency_lists();
  if (std::isnan(g.epsilon()))
    j["epsilon"] = nullptr;
  else
    j["epsilon"] = g.epsilon();
  return j;
}

inline SimilarityGraph graph_from_json(const nlohmann::json& j) {
  try {
    double eps = std::numeric_limits<double>::quiet_NaN();
    if (j.contains("epsilon") && !j.at("epsilon").is_null()) eps = j.at("epsilon").get<double>();
    return SimilarityGraph(j.at("adjacency").get<std::vector<std::vector<NodeId>>>(),
                           j.at("node_ids").get<std::vector<std::string>>(),
                           j.at("labels").get<std::vector<std::string>>(), eps);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph JSON: ") + e.what(), 0);
  }
}

}  // namespace rkcore
