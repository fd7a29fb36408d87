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
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rkcore/decomposition.hpp"
#include "rkcore/detail/io.hpp"
#include "rkcore/error.hpp"
#include "rkcore/graph.hpp"
#include "rkcore/selection.hpp"

namespace rkcore {

using IdSet = std::set<std::string>;

struct HistogramReport {
  std::map<std::uint32_t, std::size_t> bins;
  // Same keys as `bins` when present.
  std::optional<std::map<std::uint32_t, std::size_t>> overlay;
  std::size_t total = 0;
  std::size_t subset_total = 0;

  friend bool operator==(const HistogramReport&, const HistogramReport&) = default;
};

namespace detail {

inline void check_membership(const IdSet& subset, std::span<const std::string> ids) {
  std::set<std::string_view> members(ids.begin(), ids.end());
  for (const auto& id : subset)
    if (!members.count(id))
      throw MembershipError("subset id '" + id + "' is not a node of this graph", id);
}

}  // namespace detail

inline HistogramReport coreness_histogram(const DecompositionResult& r,
                                          const std::optional<IdSet>& subset = {}) {
  HistogramReport h;
  for (auto k : r.coreness) ++h.bins[k];
  h.total = r.size();
  if (subset) {
    detail::check_membership(*subset, r.node_ids);
    auto& overlay = h.overlay.emplace();
    for (const auto& [k, _] : h.bins) overlay[k] = 0;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (subset->count(r.node_ids[i])) ++overlay[r.coreness[i]];
    h.subset_total = subset->size();
  }
  return h;
}

struct LayoutNode {
  std::string id;
  std::string label;
  std::uint32_t coreness = 0;
  std::uint32_t round = 0;
  std::uint64_t rd = 0;
  std::size_t degree = 0;
  double radius = 0.0;
  double angle = 0.0;
  double size = 0.0;
  bool highlight = false;

  friend bool operator==(const LayoutNode&, const LayoutNode&) = default;
};

inline constexpr std::string_view kRadiusRule =
    "radius = (k_max - coreness + 1) / (k_max - k_min + 1); invented placement rule";

struct LayoutMeta {
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  std::string class_label;
  std::uint32_t k_min = 0;
  std::uint32_t k_max = 0;
  std::string radius_rule = std::string(kRadiusRule);

  friend bool operator==(const LayoutMeta& a, const LayoutMeta& b) {
    const bool eps_eq = (std::isnan(a.epsilon) && std::isnan(b.epsilon)) || a.epsilon == b.epsilon;
    return eps_eq && a.class_label == b.class_label && a.k_min == b.k_min &&
           a.k_max == b.k_max && a.radius_rule == b.radius_rule;
  }
};

struct RadialLayout {
  std::vector<LayoutNode> nodes;
  LayoutMeta meta;

  friend bool operator==(const RadialLayout&, const RadialLayout&) = default;
};

struct LayoutStyle {
  double min_size = 2.0;
  double max_size = 12.0;
};

// Concentric placement: the innermost ring holds the maximal core. Inside a
// ring nodes are spaced uniformly by angle in RD-descending, then index,
// order. Node size is an affine map of degree onto [min_size, max_size].
inline RadialLayout radial_layout(const SimilarityGraph& g, const DecompositionResult& r,
                                  const std::optional<IdSet>& subset = {},
                                  LayoutStyle style = {}) {
  const std::size_t n = g.node_count();
  if (r.size() != n || r.node_ids != g.sample_ids())
    throw ValidationError("decomposition is not aligned with the graph");
  if (subset) detail::check_membership(*subset, r.node_ids);

  RadialLayout layout;
  layout.meta.epsilon = g.epsilon();
  layout.meta.class_label = n ? r.labels.front() : std::string();
  if (n == 0) return layout;

  const auto [kmin_it, kmax_it] = std::minmax_element(r.coreness.begin(), r.coreness.end());
  const std::uint32_t k_min = *kmin_it, k_max = *kmax_it;
  layout.meta.k_min = k_min;
  layout.meta.k_max = k_max;
  for (NodeId v = 0; v < n; ++v)
    if (r.labels[v] != layout.meta.class_label) layout.meta.class_label = "merged";

  std::size_t dmin = std::numeric_limits<std::size_t>::max(), dmax = 0;
  for (NodeId v = 0; v < n; ++v) {
    dmin = std::min(dmin, g.degree(v));
    dmax = std::max(dmax, g.degree(v));
  }

  std::map<std::uint32_t, std::vector<NodeId>> rings;
  for (NodeId v : rank_nodes(r)) rings[r.coreness[v]].push_back(v);

  layout.nodes.resize(n);
  const double span = static_cast<double>(k_max - k_min + 1);
  for (const auto& [k, members] : rings) {
    const double radius = static_cast<double>(k_max - k + 1) / span;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const NodeId v = members[i];
      auto& node = layout.nodes[v];
      node.id = r.node_ids[v];
      node.label = r.labels[v];
      node.coreness = k;
      node.round = r.round[v];
      node.rd = r.rd[v];
      node.degree = g.degree(v);
      node.radius = radius;
      node.angle = 2.0 * std::numbers::pi * static_cast<double>(i) /
                   static_cast<double>(members.size());
      node.size = dmax == dmin
                      ? style.min_size
                      : style.min_size + (style.max_size - style.min_size) *
                                             static_cast<double>(node.degree - dmin) /
                                             static_cast<double>(dmax - dmin);
      node.highlight = subset && subset->count(node.id);
    }
  }
  return layout;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kHistogramCsvHeader = "coreness,count,subset_count";
inline constexpr std::string_view kLayoutCsvHeader =
    "id,label,coreness,round,rd,degree,radius,angle,size,highlight";

// subset_count is left blank when there is no overlay.
inline std::string to_csv(const HistogramReport& h) {
  std::string out(kHistogramCsvHeader);
  out += '\n';
  for (const auto& [k, count] : h.bins) {
    out += std::to_string(k) + ',' + std::to_string(count) + ',';
    if (h.overlay) out += std::to_string(h.overlay->at(k));
    out += '\n';
  }
  return out;
}

inline HistogramReport histogram_from_csv(std::string_view text) {
  auto rows = detail::lines(text);
  if (rows.empty() || rows[0] != kHistogramCsvHeader)
    throw FormatError("line 1: expected header '" + std::string(kHistogramCsvHeader) + "'", 1);
  HistogramReport h;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto f = detail::split(rows[r], ',');
    std::uint32_t k = 0;
    std::size_t count = 0, sub = 0;
    if (f.size() != 3 || !detail::parse_number(f[0], k) || !detail::parse_number(f[1], count) ||
        (!f[2].empty() && !detail::parse_number(f[2], sub)))
      throw FormatError("line " + std::to_string(r + 1) + ": malformed histogram row", r + 1);
    h.bins[k] = count;
    h.total += count;
    if (!f[2].empty()) {
      if (!h.overlay) h.overlay.emplace();
      (*h.overlay)[k] = sub;
      h.subset_total += sub;
    }
  }
  if (h.overlay && h.overlay->size() != h.bins.size())
    throw FormatError("histogram CSV mixes rows with and without subset counts", 0);
  return h;
}

inline nlohmann::json to_json(const HistogramReport& h) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& [k, count] : h.bins) {
    nlohmann::json b = {{"coreness", k}, {"count", count}};
    if (h.overlay) b["subset_count"] = h.overlay->at(k);
    bins.push_back(std::move(b));
  }
  nlohmann::json j = {{"bins", std::move(bins)}, {"total", h.total}};
  j["subset_total"] = h.overlay ? nlohmann::json(h.subset_total) : nlohmann::json(nullptr);
  return j;
}

inline HistogramReport histogram_from_json(const nlohmann::json& j) {
  HistogramReport h;
  try {
    h.total = j.at("total").get<std::size_t>();
    const bool has_overlay = !j.at("subset_total").is_null();
    if (has_overlay) {
      h.overlay.emplace();
      h.subset_total = j.at("subset_total").get<std::size_t>();
    }
    for (const auto& b : j.at("bins")) {
      const auto k = b.at("coreness").get<std::uint32_t>();
      h.bins[k] = b.at("count").get<std::size_t>();
      if (has_overlay) (*h.overlay)[k] = b.at("subset_count").get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("histogram JSON: ") + e.what(), 0);
  }
  return h;
}

namespace detail {

inline nlohmann::json epsilon_json(double eps) {
  return std::isnan(eps) ? nlohmann::json(nullptr) : nlohmann::json(eps);
}

inline double epsilon_from_json(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const RadialLayout& l) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : l.nodes)
    nodes.push_back({{"id", n.id},
                     {"label", n.label},
                     {"coreness", n.coreness},
                     {"round", n.round},
                     {"rd", n.rd},
                     {"degree", n.degree},
                     {"radius", n.radius},
                     {"angle", n.angle},
                     {"size", n.size},
                     {"highlight", n.highlight}});
  return {{"nodes", std::move(nodes)},
          {"meta",
           {{"epsilon", detail::epsilon_json(l.meta.epsilon)},
            {"class", l.meta.class_label},
            {"k_min", l.meta.k_min},
            {"k_max", l.meta.k_max},
            {"radius_rule", l.meta.radius_rule}}}};
}

inline RadialLayout layout_from_json(const nlohmann::json& j) {
  RadialLayout l;
  try {
    for (const auto& n : j.at("nodes"))
      l.nodes.push_back({n.at("id").get<std::string>(), n.at("label").get<std::string>(),
                         n.at("coreness").get<std::uint32_t>(), n.at("round").get<std::uint32_t>(),
                         n.at("rd").get<std::uint64_t>(), n.at("degree").get<std::size_t>(),
                         n.at("radius").get<double>(), n.at("angle").get<double>(),
                         n.at("size").get<double>(), n.at("highlight").get<bool>()});
    const auto& m = j.at("meta");
    l.meta.epsilon = detail::epsilon_from_json(m.at("epsilon"));
    l.meta.class_label = m.at("class").get<std::string>();
    l.meta.k_min = m.at("k_min").get<std::uint32_t>();
    l.meta.k_max = m.at("k_max").get<std::uint32_t>();
    l.meta.radius_rule = m.at("radius_rule").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("layout JSON: ") + e.what(), 0);
  }
  return l;
}

// Metadata travels as leading "# key=value" comment lines.
inline std::string to_csv(const RadialLayout& l) {
  std::string out;
  out += "# epsilon=" + (std::isnan(l.meta.epsilon) ? std::string("null")
                                                     : detail::format_real(l.meta.epsilon)) + '\n';
  detail::check_csv_token(l.meta.class_label, "class label");
  out += "# class=" + l.meta.class_label + '\n';
  out += "# k_min=" + std::to_string(l.meta.k_min) + '\n';
  out += "# k_max=" + std::to_string(l.meta.k_max) + '\n';
  out += "# radius_rule=" + l.meta.radius_rule + '\n';
  out += kLayoutCsvHeader;
  out += '\n';
  for (const auto& n : l.nodes) {
    detail::check_csv_token(n.id, "sample id");
    detail::check_csv_token(n.label, "label");
    out += n.id + ',' + n.label + ',' + std::to_string(n.coreness) + ',' +
           std::to_string(n.round) + ',' + std::to_string(n.rd) + ',' +
           std::to_string(n.degree) + ',' + detail::format_real(n.radius) + ',' +
           detail::format_real(n.angle) + ',' + detail::format_real(n.size) + ',' +
           (n.highlight ? "1" : "0") + '\n';
  }
  return out;
}

inline RadialLayout layout_from_csv(std::string_view text) {
  RadialLayout l;
  auto rows = detail::lines(text);
  std::size_t r = 0;
  auto fail = [&](std::size_t line) {
    throw FormatError("line " + std::to_string(line) + ": malformed layout CSV", line);
  };
  for (; r < rows.size() && rows[r].starts_with("# "); ++r) {
    auto body = rows[r].substr(2);
    auto eq = body.find('=');
    if (eq == std::string_view::npos) fail(r + 1);
    auto key = body.substr(0, eq), value = body.substr(eq + 1);
    if (key == "epsilon") {
      if (value == "null")
        l.meta.epsilon = std::numeric_limits<double>::quiet_NaN();
      else if (!detail::parse_number(value, l.meta.epsilon))
        fail(r + 1);
    } else if (key == "class") {
      l.meta.class_label = std::string(value);
    } else if (key == "k_min") {
      if (!detail::parse_number(value, l.meta.k_min)) fail(r + 1);
    } else if (key == "k_max") {
      if (!detail::parse_number(value, l.meta.k_max)) fail(r + 1);
    } else if (key == "radius_rule") {
      l.meta.radius_rule = std::string(value);
    }
  }
  if (r >= rows.size() || rows[r] != kLayoutCsvHeader) fail(r + 1);
  for (++r; r < rows.size(); ++r) {
    auto f = detail::split(rows[r], ',');
    LayoutNode n;
    if (f.size() != 10) fail(r + 1);
    n.id = std::string(f[0]);
    n.label = std::string(f[1]);
    if (!detail::parse_number(f[2], n.coreness) || !detail::parse_number(f[3], n.round) ||
        !detail::parse_number(f[4], n.rd) || !detail::parse_number(f[5], n.degree) ||
        !detail::parse_number(f[6], n.radius) || !detail::parse_number(f[7], n.angle) ||
        !detail::parse_number(f[8], n.size) || (f[9] != "0" && f[9] != "1"))
      fail(r + 1);
    n.highlight = f[9] == "1";
    l.nodes.push_back(std::move(n));
  }
  return l;
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr std::string_view kSvgOpen =
    "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
    "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ";

}  // namespace detail

inline constexpr std::string_view kBaseFill = "#b7cde8";
inline constexpr std::string_view kHighlightFill = "#1f3f8f";
inline constexpr std::string_view kFullBarFill = "#4c72b0";
inline constexpr std::string_view kSubsetBarFill = "#c44e52";

inline std::string to_svg(const RadialLayout& l) {
  constexpr double canvas = 800.0, center = 400.0, outer = 360.0;
  std::string out(detail::kSvgOpen);
  out += "width=\"" + detail::fixed(canvas, 0) + "\" height=\"" + detail::fixed(canvas, 0) +
         "\" viewBox=\"0 0 800 800\">\n";
  out += "<title>coreness layout: " + detail::xml_escape(l.meta.class_label) + " (k " +
         std::to_string(l.meta.k_min) + ".." + std::to_string(l.meta.k_max) + ")</title>\n";
  out += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"#ffffff\"/>\n";

  std::set<double> radii;
  for (const auto& n : l.nodes) radii.insert(n.radius);
  out += "<g id=\"rings\" fill=\"none\" stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double r : radii)
    out += "<circle cx=\"400\" cy=\"400\" r=\"" + detail::fixed(r * outer) + "\"/>\n";
  out += "</g>\n";

  auto emit = [&](bool highlighted) {
    out += highlighted ? "<g id=\"subset\">\n" : "<g id=\"nodes\">\n";
    for (const auto& n : l.nodes) {
      if (n.highlight != highlighted) continue;
      const double x = center + n.radius * outer * std::cos(n.angle);
      const double y = center - n.radius * outer * std::sin(n.angle);
      out += "<circle cx=\"" + detail::fixed(x) + "\" cy=\"" + detail::fixed(y) + "\" r=\"" +
             detail::fixed(n.size / 2.0) + "\" fill=\"" +
             std::string(highlighted ? kHighlightFill : kBaseFill) + "\"><title>" +
             detail::xml_escape(n.id) + " k=" + std::to_string(n.coreness) +
             " rd=" + std::to_string(n.rd) + "</title></circle>\n";
    }
    out += "</g>\n";
  };
  emit(false);
  emit(true);
  out += "</svg>\n";
  return out;
}

enum class YScale { linear, sqrt };

// Grouped bars per coreness value, full set first and subset second.
inline std::string to_svg(const HistogramReport& h, YScale scale = YScale::linear) {
  constexpr double width = 800.0, height = 400.0, left = 60.0, right = 20.0, top = 30.0,
                   bottom = 50.0;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  std::size_t peak = 1;
  for (const auto& [_, c] : h.bins) peak = std::max(peak, c);
  auto scaled = [&](std::size_t c) {
    const double x = static_cast<double>(c), p = static_cast<double>(peak);
    return scale == YScale::sqrt ? std::sqrt(x) / std::sqrt(p) : x / p;
  };

  std::string out(detail::kSvgOpen);
  out += "width=\"800\" height=\"400\" viewBox=\"0 0 800 400\">\n";
  out += std::string("<title>coreness distribution (") +
         (scale == YScale::sqrt ? "square-root" : "linear") + " scale)</title>\n";
  out += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"400\" fill=\"#ffffff\"/>\n";
  out += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top + plot_h) +
         "\" x2=\"" + detail::fixed(left + plot_w) + "\" y2=\"" + detail::fixed(top + plot_h) +
         "\" stroke=\"#000000\"/>\n";
  out += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top) + "\" x2=\"" +
         detail::fixed(left) + "\" y2=\"" + detail::fixed(top + plot_h) +
         "\" stroke=\"#000000\"/>\n";

  const double slot = h.bins.empty() ? plot_w : plot_w / static_cast<double>(h.bins.size());
  const double bar = slot * (h.overlay ? 0.4 : 0.8);
  std::size_t i = 0;
  for (const auto& [k, count] : h.bins) {
    const double x0 = left + slot * static_cast<double>(i) + slot * 0.1;
    auto emit_bar = [&](double x, std::size_t c, std::string_view fill, std::string_view cls) {
      const double bh = scaled(c) * plot_h;
      out += "<rect class=\"" + std::string(cls) + "\" x=\"" + detail::fixed(x) + "\" y=\"" +
             detail::fixed(top + plot_h - bh) + "\" width=\"" + detail::fixed(bar) +
             "\" height=\"" + detail::fixed(bh) + "\" fill=\"" + std::string(fill) +
             "\"><title>k=" + std::to_string(k) + " count=" + std::to_string(c) +
             "</title></rect>\n";
    };
    emit_bar(x0, count, kFullBarFill, "full");
    if (h.overlay) emit_bar(x0 + bar, h.overlay->at(k), kSubsetBarFill, "subset");
    out += "<text x=\"" + detail::fixed(x0 + slot * 0.4) + "\" y=\"" +
           detail::fixed(top + plot_h + 18.0) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
           std::to_string(k) + "</text>\n";
    ++i;
  }
  out += "<text x=\"" + detail::fixed(left + plot_w / 2.0) + "\" y=\"" +
         detail::fixed(height - 10.0) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">coreness</text>\n";
  out += "<text x=\"15\" y=\"" + detail::fixed(top + plot_h / 2.0) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 15 " + detail::fixed(top + plot_h / 2.0) + ")\">count (peak " +
         std::to_string(peak) + ")</text>\n";
  out += "</svg>\n";
  return out;
}

enum class ReportFormat { svg, csv, json };

inline std::string render(const HistogramReport& h, ReportFormat format,
                          YScale scale = YScale::linear) {
  switch (format) {
    case ReportFormat::svg: return to_svg(h, scale);
    case ReportFormat::csv: return to_csv(h);
    case ReportFormat::json: return to_json(h).dump(2) + '\n';
  }
  return {};
}

inline std::string render(const RadialLayout& l, ReportFormat format) {
  switch (format) {
    case ReportFormat::svg: return to_svg(l);
    case ReportFormat::csv: return to_csv(l);
    case ReportFormat::json: return to_json(l).dump(2) + '\n';
  }
  return {};
}

inline void render(const HistogramReport& h, ReportFormat format,
                   const std::filesystem::path& path, YScale scale = YScale::linear) {
  detail::write_file_atomic(path, render(h, format, scale));
}

inline void render(const RadialLayout& l, ReportFormat format,
                   const std::filesystem::path& path) {
  detail::write_file_atomic(path, render(l, format));
}

}  // namespace rkcore
