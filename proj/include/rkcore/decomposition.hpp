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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rkcore/detail/io.hpp"
#include "rkcore/error.hpp"
#include "rkcore/graph.hpp"

namespace rkcore {

// Per-node output of the RK-core peeling. Index i refers to graph node i.
struct DecompositionResult {
  std::vector<std::string> node_ids;
  std::vector<std::string> labels;
  std::vector<std::uint32_t> coreness;
  // Peeling round in which the node was removed (onion layer).
  std::vector<std::uint32_t> round;
  // Own round plus the rounds of all original neighbors.
  std::vector<std::uint64_t> rd;
  // Nodes in the order they were removed; empty when loaded from a file.
  std::vector<NodeId> removal_order;
  // Number of while-loop iterations the peeling executed.
  std::size_t iterations = 0;

  std::size_t size() const noexcept { return node_ids.size(); }

  std::uint32_t max_round() const {
    return round.empty() ? 0 : *std::max_element(round.begin(), round.end());
  }

  // Compares the per-node data only.
  bool same_values(const DecompositionResult& o) const {
    return node_ids == o.node_ids && labels == o.labels && coreness == o.coreness &&
           round == o.round && rd == o.rd;
  }
};

// RK-core: K-core peeling that also records the round each node is removed
// in and derives the RD score from those rounds.
//
// Each round removes every surviving node whose current degree is <= K,
// assigning it the current K and round. Degrees of surviving neighbors
// drop as nodes leave; a node that falls to <= K mid-round waits for the
// next round. The round counter advances every iteration, and K rises to
// the minimum surviving degree whenever that minimum reaches K + 1. K
// starts at 1, so isolated nodes get coreness 1.
//
// Runs in O(N + E + max degree) using lazily invalidated degree buckets.
inline DecompositionResult rk_core(const SimilarityGraph& g) {
  const std::size_t n = g.node_count();
  DecompositionResult res;
  res.node_ids = g.sample_ids();
  res.labels = g.labels();
  res.coreness.assign(n, 0);
  res.round.assign(n, 0);
  res.rd.assign(n, 0);
  res.removal_order.reserve(n);

  std::vector<std::size_t> degree(n);
  std::vector<char> alive(n, 1);
  std::size_t max_degree = 0;
  for (NodeId v = 0; v < n; ++v) {
    degree[v] = g.degree(v);
    max_degree = std::max(max_degree, degree[v]);
  }

  // buckets[d] holds every node that has had degree d while above K;
  // entries go stale once the node is removed or its degree moves on.
  std::vector<std::vector<NodeId>> buckets(max_degree + 1);
  for (NodeId v = 0; v < n; ++v) buckets[degree[v]].push_back(v);

  std::size_t k = 1;
  std::uint32_t round = 1;
  std::size_t remaining = n;
  std::size_t scan = k + 1;

  std::vector<NodeId> frontier, next;
  for (NodeId v = 0; v < n; ++v)
    if (degree[v] <= k) frontier.push_back(v);

  while (remaining > 0) {
    ++res.iterations;
    for (NodeId v : frontier) {
      res.coreness[v] = static_cast<std::uint32_t>(k);
      res.round[v] = round;
      alive[v] = 0;
      res.removal_order.push_back(v);
    }
    remaining -= frontier.size();

    next.clear();
    for (NodeId v : frontier) {
      for (NodeId w : g.neighbors(v)) {
        if (!alive[w]) continue;
        const std::size_t d = --degree[w];
        if (d == k)
          next.push_back(w);
        else if (d > k)
          buckets[d].push_back(w);
      }
    }
    ++round;

    if (next.empty() && remaining > 0) {
      // Every survivor has degree > K, so min(D) >= K + 1.
      scan = std::max(scan, k + 1);
      for (;; ++scan) {
        for (NodeId w : buckets[scan])
          if (alive[w] && degree[w] == scan) next.push_back(w);
        if (!next.empty()) break;
      }
      k = scan;
    }
    std::sort(next.begin(), next.end());
    frontier.swap(next);
  }

  for (NodeId v = 0; v < n; ++v) {
    std::uint64_t sum = res.round[v];
    for (NodeId w : g.neighbors(v)) sum += res.round[w];
    res.rd[v] = sum;
  }
  return res;
}

// Textbook core numbers (Batagelj-Zaversnik bin sort). Isolated nodes get 0.
inline std::vector<std::uint32_t> classic_core_numbers(const SimilarityGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> deg(n), pos(n), vert(n);
  std::size_t max_degree = 0;
  for (NodeId v = 0; v < n; ++v) {
    deg[v] = g.degree(v);
    max_degree = std::max(max_degree, deg[v]);
  }
  std::vector<std::size_t> bin(max_degree + 1, 0);
  for (auto d : deg) ++bin[d];
  std::size_t start = 0;
  for (auto& b : bin) {
    const auto count = b;
    b = start;
    start += count;
  }
  for (NodeId v = 0; v < n; ++v) {
    pos[v] = bin[deg[v]]++;
    vert[pos[v]] = v;
  }
  for (std::size_t d = max_degree; d > 0; --d) bin[d] = bin[d - 1];
  if (!bin.empty()) bin[0] = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<NodeId>(vert[i]);
    for (NodeId u : g.neighbors(v)) {
      if (deg[u] > deg[v]) {
        const std::size_t du = deg[u], pu = pos[u], pw = bin[du];
        const std::size_t w = vert[pw];
        if (u != w) {
          pos[u] = pw;
          vert[pu] = w;
          pos[w] = pu;
          vert[pw] = u;
        }
        ++bin[du];
        --deg[u];
      }
    }
  }
  return {deg.begin(), deg.end()};
}

inline constexpr std::string_view kDecompositionCsvHeader = "id,label,coreness,round,rd";

// Rows of every result in sequence under a single header.
inline std::string to_csv(std::span<const DecompositionResult> results) {
  std::string out(kDecompositionCsvHeader);
  out += '\n';
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      detail::check_csv_token(r.node_ids[i], "sample id");
      detail::check_csv_token(r.labels[i], "label");
      out += r.node_ids[i] + ',' + r.labels[i] + ',' + std::to_string(r.coreness[i]) + ',' +
             std::to_string(r.round[i]) + ',' + std::to_string(r.rd[i]) + '\n';
    }
  }
  return out;
}

inline std::string to_csv(const DecompositionResult& r) {
  return to_csv(std::span<const DecompositionResult>(&r, 1));
}

// Groups rows by label in order of first appearance.
inline std::vector<DecompositionResult> decomposition_from_csv(std::string_view text) {
  auto rows = detail::lines(text);
  if (rows.empty() || rows[0] != kDecompositionCsvHeader)
    throw FormatError("line 1: expected header '" + std::string(kDecompositionCsvHeader) + "'",
                      1);
  std::vector<DecompositionResult> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::size_t line_no = r + 1;
    auto f = detail::split(rows[r], ',');
    std::uint32_t core = 0, rnd = 0;
    std::uint64_t rd = 0;
    if (f.size() != 5 || !detail::parse_number(f[2], core) ||
        !detail::parse_number(f[3], rnd) || !detail::parse_number(f[4], rd))
      throw FormatError("line " + std::to_string(line_no) + ": malformed decomposition row",
                        line_no);
    auto it = std::find_if(out.begin(), out.end(), [&](const DecompositionResult& d) {
      return d.labels.front() == f[1];
    });
    if (it == out.end()) it = out.emplace(out.end());
    it->node_ids.emplace_back(f[0]);
    it->labels.emplace_back(f[1]);
    it->coreness.push_back(core);
    it->round.push_back(rnd);
    it->rd.push_back(rd);
  }
  return out;
}

inline nlohmann::json to_json(const DecompositionResult& r) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < r.size(); ++i)
    nodes.push_back({{"id", r.node_ids[i]},
                     {"label", r.labels[i]},
                     {"coreness", r.coreness[i]},
                     {"round", r.round[i]},
                     {"rd", r.rd[i]}});
  return {{"nodes", std::move(nodes)}};
}

inline DecompositionResult decomposition_from_json(const nlohmann::json& j) {
  DecompositionResult r;
  try {
    for (const auto& node : j.at("nodes")) {
      r.node_ids.push_back(node.at("id").get<std::string>());
      r.labels.push_back(node.at("label").get<std::string>());
      r.coreness.push_back(node.at("coreness").get<std::uint32_t>());
      r.round.push_back(node.at("round").get<std::uint32_t>());
      r.rd.push_back(node.at("rd").get<std::uint64_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("decomposition JSON: ") + e.what(), 0);
  }
  return r;
}

}  // namespace rkcore
