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
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rkcore/decomposition.hpp"
#include "rkcore/detail/io.hpp"
#include "rkcore/error.hpp"

namespace rkcore {

enum class Tier { high, medium, low };

inline std::string_view tier_name(Tier t) {
  switch (t) {
    case Tier::high: return "high";
    case Tier::medium: return "medium";
    case Tier::low: return "low";
  }
  return "";
}

inline constexpr Tier kAllTiers[] = {Tier::high, Tier::medium, Tier::low};

// Best first: coreness descending, then RD descending, then node index.
inline std::vector<NodeId> rank_nodes(const DecompositionResult& r) {
  std::vector<NodeId> order(r.size());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    if (r.coreness[a] != r.coreness[b]) return r.coreness[a] > r.coreness[b];
    if (r.rd[a] != r.rd[b]) return r.rd[a] > r.rd[b];
    return a < b;
  });
  return order;
}

// High is the leading n, Low the trailing n, and Medium the n positions
// starting at floor((N - n) / 2).
inline std::vector<NodeId> select_tier(std::span<const NodeId> ordering, std::size_t n,
                                       Tier tier) {
  const std::size_t total = ordering.size();
  if (n < 1 || n > total)
    throw RangeError("tier size " + std::to_string(n) + " outside [1, " +
                     std::to_string(total) + "]");
  std::size_t start = 0;
  switch (tier) {
    case Tier::high: start = 0; break;
    case Tier::medium: start = (total - n) / 2; break;
    case Tier::low: start = total - n; break;
  }
  return {ordering.begin() + static_cast<std::ptrdiff_t>(start),
          ordering.begin() + static_cast<std::ptrdiff_t>(start + n)};
}

// ceil(fraction * n). A relative slack of 1e-9 absorbs representation
// error such as 0.07 * 100 evaluating to 7.000000000000001.
inline std::size_t fraction_count(double fraction, std::size_t n) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw RangeError("fraction must lie in (0, 1], got " + detail::format_real(fraction));
  const double exact = fraction * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(k, n == 0 ? 0 : 1, n);
}

// Top ceil(fraction * N_c) of every class ordering.
inline std::vector<std::vector<NodeId>> select_fraction(
    std::span<const std::vector<NodeId>> per_class_orderings, double fraction) {
  std::vector<std::vector<NodeId>> out;
  out.reserve(per_class_orderings.size());
  for (const auto& ordering : per_class_orderings) {
    if (ordering.empty()) throw RangeError("fraction selection over an empty class");
    const auto k = fraction_count(fraction, ordering.size());
    out.emplace_back(ordering.begin(), ordering.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

struct ClassSelection {
  std::string label;
  std::vector<NodeId> ordering;
  std::map<Tier, std::vector<NodeId>> tiers;
  std::map<double, std::vector<NodeId>> fractions;
};

struct RankedSelection {
  std::vector<ClassSelection> classes;

  // Nodes placed in more than one tier, summed over classes. Nonzero only
  // when 3n > N for some class.
  std::size_t tier_overlap() const {
    std::size_t overlap = 0;
    for (const auto& c : classes) {
      std::map<NodeId, int> seen;
      for (const auto& [_, ids] : c.tiers)
        for (auto v : ids) ++seen[v];
      for (const auto& [_, count] : seen)
        if (count > 1) ++overlap;
    }
    return overlap;
  }
};

inline RankedSelection rank_and_select(std::span<const DecompositionResult> classes,
                                       std::optional<std::size_t> tier_size,
                                       std::span<const double> fractions) {
  RankedSelection sel;
  std::vector<std::vector<NodeId>> orderings;
  for (const auto& r : classes) {
    ClassSelection c;
    c.label = r.labels.empty() ? std::string() : r.labels.front();
    c.ordering = rank_nodes(r);
    if (tier_size)
      for (Tier t : kAllTiers) c.tiers[t] = select_tier(c.ordering, *tier_size, t);
    orderings.push_back(c.ordering);
    sel.classes.push_back(std::move(c));
  }
  for (double f : fractions) {
    auto picked = select_fraction(orderings, f);
    for (std::size_t i = 0; i < picked.size(); ++i)
      sel.classes[i].fractions[f] = std::move(picked[i]);
  }
  return sel;
}

// Externally produced or exported subset. Newline files carry no class
// information and land in `unclassed`.
struct SubsetManifest {
  std::map<std::string, std::vector<std::string>> by_class;
  std::vector<std::string> unclassed;

  std::size_t size() const {
    std::size_t n = unclassed.size();
    for (const auto& [_, ids] : by_class) n += ids.size();
    return n;
  }

  // Ids that belong to class `label`, resolving unclassed ids through the
  // class's own id list.
  std::set<std::string> ids_for(const std::string& label,
                                std::span<const std::string> class_ids) const {
    std::set<std::string> out;
    if (auto it = by_class.find(label); it != by_class.end())
      out.insert(it->second.begin(), it->second.end());
    std::set<std::string_view> members(class_ids.begin(), class_ids.end());
    for (const auto& id : unclassed)
      if (members.count(id)) out.insert(id);
    return out;
  }
};

// Builds a manifest from one picked set per class.
inline SubsetManifest make_manifest(std::span<const DecompositionResult> classes,
                                    std::span<const std::vector<NodeId>> picked) {
  SubsetManifest m;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    auto& ids = m.by_class[classes[i].labels.empty() ? "" : classes[i].labels.front()];
    for (NodeId v : picked[i]) ids.push_back(classes[i].node_ids[v]);
  }
  return m;
}

// One id per line: classes in ascending label order, then unclassed ids.
inline std::string to_id_lines(const SubsetManifest& m) {
  std::string out;
  for (const auto& [_, ids] : m.by_class)
    for (const auto& id : ids) out += id + '\n';
  for (const auto& id : m.unclassed) out += id + '\n';
  return out;
}

inline nlohmann::json to_json(const SubsetManifest& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [label, ids] : m.by_class) j[label] = ids;
  return j;
}

inline SubsetManifest subset_from_id_lines(std::string_view text) {
  SubsetManifest m;
  std::set<std::string_view> seen;
  auto rows = detail::lines(text);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto id = detail::trim(rows[r]);
    if (id.empty()) continue;
    if (!seen.insert(id).second)
      throw FormatError("line " + std::to_string(r + 1) + ": duplicate id '" +
                            std::string(id) + "'",
                        r + 1);
    m.unclassed.emplace_back(id);
  }
  return m;
}

inline SubsetManifest subset_from_json(const nlohmann::json& j) {
  SubsetManifest m;
  if (!j.is_object()) throw FormatError("subset manifest must be a JSON object", 0);
  try {
    for (const auto& [label, ids] : j.items())
      m.by_class[label] = ids.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("subset manifest: ") + e.what(), 0);
  }
  return m;
}

// ".json" files are class manifests; anything else is one id per line.
inline SubsetManifest load_subset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw IoError("subset file '" + path.string() + "' does not exist");
  auto text = detail::read_file(path);
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("subset manifest '" + path.string() + "': " + e.what(), e.byte);
    }
    return subset_from_json(j);
  }
  return subset_from_id_lines(text);
}

}  // namespace rkcore
