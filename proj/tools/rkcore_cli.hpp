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

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rkcore/rkcore.hpp"

namespace rkcore::cli {

namespace fs = std::filesystem;

// Missing or conflicting options discovered after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string input;
  std::optional<double> epsilon;
  std::optional<double> percentile;
  std::optional<std::string> class_filter;
  std::vector<double> fractions;
  std::optional<std::size_t> tier_size;
  std::string format;
  std::optional<std::string> out_dir;
  std::optional<std::string> subset;
  bool merge_classes = false;
  bool sqrt_scale = false;
};

struct LabeledGraph {
  std::string label;
  std::string stem;
  SimilarityGraph graph;
};

inline void prepare_out(const Options& opt);

// Collects manifest fields and the list of written data files.
class Run {
 public:
  Run(std::string subcommand, const Options& opt) : opt_(opt) {
    prepare_out(opt);
    manifest_["tool"] = "rkcore";
    manifest_["version"] = std::string(kVersion);
    manifest_["subcommand"] = std::move(subcommand);
    manifest_["input"] = opt.input;
    manifest_["epsilon"] = opt.epsilon ? nlohmann::json(*opt.epsilon) : nlohmann::json(nullptr);
    manifest_["epsilon_percentile"] =
        opt.percentile ? nlohmann::json(*opt.percentile) : nlohmann::json(nullptr);
    manifest_["class"] = opt.class_filter ? nlohmann::json(*opt.class_filter) : nlohmann::json(nullptr);
    manifest_["merge_classes"] = opt.merge_classes;
    manifest_["fractions"] = opt.fractions;
    manifest_["tier_size"] = opt.tier_size ? nlohmann::json(*opt.tier_size) : nlohmann::json(nullptr);
    manifest_["format"] = opt.format;
    manifest_["subset"] = opt.subset ? nlohmann::json(*opt.subset) : nlohmann::json(nullptr);
    manifest_["sqrt_scale"] = opt.sqrt_scale;
    manifest_["out"] = opt.out_dir ? nlohmann::json(*opt.out_dir) : nlohmann::json(nullptr);
    manifest_["outputs"] = nlohmann::json::array();
  }

  nlohmann::json& manifest() { return manifest_; }

  void write(const std::string& name, const std::string& contents) {
    detail::write_file_atomic(fs::path(*opt_.out_dir) / name, contents);
    manifest_["outputs"].push_back(name);
  }

  void finish() {
    if (opt_.out_dir)
      detail::write_file_atomic(fs::path(*opt_.out_dir) / "manifest.json",
                                manifest_.dump(2) + '\n');
  }

 private:
  const Options& opt_;
  nlohmann::json manifest_;
};

inline std::string file_stem_for(const std::string& label) {
  std::string s;
  for (char c : label) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    s += keep ? c : '_';
  }
  return s.empty() ? "_" : s;
}

// Unique file stems; labels that sanitize to the same stem get a suffix.
inline void assign_stems(std::vector<LabeledGraph>& graphs) {
  std::set<std::string> used;
  for (auto& g : graphs) {
    std::string stem = file_stem_for(g.label);
    for (int i = 1; used.count(stem); ++i) stem = file_stem_for(g.label) + "_" + std::to_string(i);
    used.insert(stem);
    g.stem = stem;
  }
}

inline void require_inputs(const Options& opt) {
  if (!fs::exists(opt.input)) throw IoError("input '" + opt.input + "' does not exist");
  if (opt.subset && !fs::exists(*opt.subset))
    throw IoError("subset file '" + *opt.subset + "' does not exist");
}

inline void prepare_out(const Options& opt) {
  if (opt.out_dir) {
    std::error_code ec;
    fs::create_directories(*opt.out_dir, ec);
    if (ec || !fs::is_directory(*opt.out_dir))
      throw IoError("cannot create output directory '" + *opt.out_dir + "'");
  }
}

inline BuildConfig threshold(const Options& opt) {
  if (opt.epsilon) return BuildConfig::absolute(*opt.epsilon);
  if (opt.percentile) return BuildConfig::percentile(*opt.percentile);
  throw UsageError("graph construction needs --epsilon or --epsilon-percentile");
}

inline bool is_graph_file(const fs::path& p) {
  return p.extension() == ".json" || p.extension() == ".edges";
}

inline std::vector<LabeledGraph> graphs_from_embeddings(const Options& opt, Run& run) {
  const auto config = threshold(opt);
  auto m = load_embeddings(opt.input);
  if (opt.class_filter) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m.samples(); ++i)
      if (m.labels()[i] == *opt.class_filter) rows.push_back(i);
    if (rows.empty())
      throw ValidationError("class '" + *opt.class_filter + "' has no samples in '" +
                            opt.input + "'");
    m = m.select_rows(rows);
  }
  std::vector<LabeledGraph> out;
  if (opt.merge_classes) {
    out.push_back({"all", "", build_graph(m, config)});
  } else {
    for (auto& cg : build_class_graphs(m, config))
      out.push_back({cg.label, "", std::move(cg.graph)});
  }
  assign_stems(out);
  nlohmann::json eps = nlohmann::json::object();
  for (const auto& g : out) eps[g.label] = g.graph.epsilon();
  run.manifest()["resolved_epsilon"] = std::move(eps);
  return out;
}

inline std::vector<LabeledGraph> load_graphs(const Options& opt, Run& run) {
  const fs::path in(opt.input);
  if (!is_graph_file(in)) return graphs_from_embeddings(opt, run);
  SimilarityGraph g;
  if (in.extension() == ".edges") {
    g = parse_edge_list(detail::read_file(in));
  } else {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("graph JSON '" + opt.input + "': " + e.what(), e.byte);
    }
    g = graph_from_json(j);
  }
  std::string label = "all";
  if (g.node_count() > 0 &&
      std::all_of(g.labels().begin(), g.labels().end(),
                  [&](const std::string& l) { return l == g.labels().front(); }))
    label = g.labels().front();
  std::vector<LabeledGraph> out{{label, "", std::move(g)}};
  assign_stems(out);
  return out;
}

inline std::vector<DecompositionResult> decompose_all(const std::vector<LabeledGraph>& graphs) {
  std::vector<DecompositionResult> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(rk_core(g.graph));
  return out;
}

inline std::vector<DecompositionResult> load_decomposition(const Options& opt) {
  const fs::path in(opt.input);
  auto text = detail::read_file(in);
  if (in.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("decomposition JSON '" + opt.input + "': " + e.what(), e.byte);
    }
    // Regroup by label so selection stays class-balanced.
    return decomposition_from_csv(to_csv(decomposition_from_json(j)));
  }
  return decomposition_from_csv(text);
}

inline std::string fraction_name(double f) { return detail::format_real(f); }

inline void write_selection(const std::vector<DecompositionResult>& classes,
                            const Options& opt, Run& run, std::ostream& out,
                            std::ostream& err) {
  if (!opt.tier_size && opt.fractions.empty()) return;
  auto sel = rank_and_select(classes, opt.tier_size, opt.fractions);
  if (opt.tier_size && sel.tier_overlap() > 0) {
    err << "warning: tiers overlap in " << sel.tier_overlap()
        << " node(s); tier size exceeds a third of some class\n";
  }
  run.manifest()["tier_overlap"] = sel.tier_overlap();

  nlohmann::json summary = nlohmann::json::object();
  auto emit = [&](const std::string& name, std::vector<std::vector<NodeId>> picked) {
    auto manifest = make_manifest(classes, picked);
    summary[name] = to_json(manifest);
    if (opt.out_dir) {
      run.write(name + ".txt", to_id_lines(manifest));
      run.write(name + ".json", to_json(manifest).dump(2) + '\n');
    }
  };
  if (opt.tier_size) {
    for (Tier t : kAllTiers) {
      std::vector<std::vector<NodeId>> picked;
      for (const auto& c : sel.classes) picked.push_back(c.tiers.at(t));
      emit("tier_" + std::string(tier_name(t)), std::move(picked));
    }
  }
  for (double f : opt.fractions) {
    std::vector<std::vector<NodeId>> picked;
    for (const auto& c : sel.classes) picked.push_back(c.fractions.at(f));
    emit("fraction_" + fraction_name(f), std::move(picked));
  }
  if (!opt.out_dir) out << summary.dump(2) << '\n';
}

inline ReportFormat report_format(const std::string& f) {
  if (f == "svg") return ReportFormat::svg;
  if (f == "csv") return ReportFormat::csv;
  return ReportFormat::json;
}

inline void write_analysis(const std::vector<LabeledGraph>& graphs,
                           const std::vector<DecompositionResult>& results, const Options& opt,
                           Run& run) {
  std::optional<SubsetManifest> subset;
  if (opt.subset) subset = load_subset(*opt.subset);
  if (subset) {
    // Every subset id must name a node of some analyzed graph.
    std::set<std::string> known;
    for (const auto& g : graphs) known.insert(g.graph.sample_ids().begin(), g.graph.sample_ids().end());
    for (const auto& id : subset->unclassed)
      if (!known.count(id)) throw MembershipError("subset id '" + id + "' is not a node of any analyzed graph", id);
    for (const auto& [_, ids] : subset->by_class)
      for (const auto& id : ids)
        if (!known.count(id)) throw MembershipError("subset id '" + id + "' is not a node of any analyzed graph", id);
  }
  const auto format = report_format(opt.format);
  const std::string ext = opt.format;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    std::optional<IdSet> ids;
    if (subset) {
      if (g.label == "all" || opt.merge_classes) {
        IdSet all(subset->unclassed.begin(), subset->unclassed.end());
        for (const auto& [_, v] : subset->by_class) all.insert(v.begin(), v.end());
        ids = std::move(all);
      } else {
        ids = subset->ids_for(g.label, g.graph.sample_ids());
      }
    }
    auto hist = coreness_histogram(results[i], ids);
    auto layout = radial_layout(g.graph, results[i], ids);
    if (opt.merge_classes) layout.meta.class_label = "merged";
    run.write("histogram_" + g.stem + "." + ext,
              render(hist, format, opt.sqrt_scale ? YScale::sqrt : YScale::linear));
    run.write("layout_" + g.stem + "." + ext, render(layout, format));
  }
}

inline void write_graphs(const std::vector<LabeledGraph>& graphs, Run& run) {
  for (const auto& g : graphs) {
    run.write("graph_" + g.stem + ".json", to_json(g.graph).dump() + '\n');
    run.write("graph_" + g.stem + ".edges", to_edge_list(g.graph));
  }
}

inline std::string decomposition_json(const std::vector<DecompositionResult>& results) {
  DecompositionResult merged;
  for (const auto& r : results) {
    merged.node_ids.insert(merged.node_ids.end(), r.node_ids.begin(), r.node_ids.end());
    merged.labels.insert(merged.labels.end(), r.labels.begin(), r.labels.end());
    merged.coreness.insert(merged.coreness.end(), r.coreness.begin(), r.coreness.end());
    merged.round.insert(merged.round.end(), r.round.begin(), r.round.end());
    merged.rd.insert(merged.rd.end(), r.rd.begin(), r.rd.end());
  }
  return to_json(merged).dump(2) + '\n';
}

inline void cmd_build_graph(const Options& opt, std::ostream& out, std::ostream&) {
  require_inputs(opt);
  threshold(opt);
  Run run("build-graph", opt);
  auto graphs = graphs_from_embeddings(opt, run);
  if (opt.out_dir) {
    write_graphs(graphs, run);
  } else {
    nlohmann::json all = nlohmann::json::array();
    for (const auto& g : graphs) all.push_back({{"label", g.label}, {"graph", to_json(g.graph)}});
    out << all.dump() << '\n';
  }
  run.finish();
}

inline void cmd_decompose(const Options& opt, std::ostream& out, std::ostream&) {
  require_inputs(opt);
  Run run("decompose", opt);
  auto graphs = load_graphs(opt, run);
  auto results = decompose_all(graphs);
  const bool json = opt.format == "json";
  const std::string text = json ? decomposition_json(results) : to_csv(results);
  if (opt.out_dir)
    run.write(json ? "decomposition.json" : "decomposition.csv", text);
  else
    out << text;
  run.finish();
}

inline void cmd_select(const Options& opt, std::ostream& out, std::ostream& err) {
  require_inputs(opt);
  if (!opt.tier_size && opt.fractions.empty())
    throw UsageError("select needs --tier-size and/or --fraction");
  Run run("select", opt);
  write_selection(load_decomposition(opt), opt, run, out, err);
  run.finish();
}

inline void cmd_analyze(const Options& opt, std::ostream&, std::ostream&) {
  if (!opt.out_dir) throw UsageError("analyze needs --out <dir>");
  require_inputs(opt);
  Run run("analyze", opt);
  auto graphs = load_graphs(opt, run);
  auto results = decompose_all(graphs);
  write_analysis(graphs, results, opt, run);
  run.finish();
}

inline void cmd_pipeline(const Options& opt, std::ostream& out, std::ostream& err) {
  require_inputs(opt);
  threshold(opt);
  Run run("pipeline", opt);
  auto graphs = graphs_from_embeddings(opt, run);
  auto results = decompose_all(graphs);
  if (!opt.out_dir) {
    out << to_csv(results);
    return;
  }
  write_graphs(graphs, run);
  run.write("decomposition.csv", to_csv(results));
  run.write("decomposition.json", decomposition_json(results));
  write_selection(results, opt, run, out, err);
  write_analysis(graphs, results, opt, run);
  run.finish();
}

// Exit codes: 0 success, 1 domain or validation error, 2 usage error.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Coreness, onion rounds and RD ranking over embedding similarity graphs",
               "rkcore"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options opt;
  auto add_threshold = [&](CLI::App* sub) {
    auto* e = sub->add_option("--epsilon", opt.epsilon, "Absolute similarity threshold in [-1, 1]");
    auto* p = sub->add_option("--epsilon-percentile", opt.percentile,
                              "Threshold at this percentile of pairwise similarities");
    e->excludes(p);
    p->excludes(e);
  };
  auto add_graph_input = [&](CLI::App* sub, bool graph_files_ok) {
    sub->add_option("input", opt.input,
                    graph_files_ok ? "Embeddings (.emb/.csv), graph JSON or edge list"
                                   : "Embeddings (.emb or .csv)")
        ->required();
    add_threshold(sub);
    sub->add_option("--class", opt.class_filter, "Only use samples with this label");
    sub->add_flag("--merge-classes", opt.merge_classes, "One graph over all classes");
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out_dir, "Output directory");
  };
  auto add_selection = [&](CLI::App* sub) {
    sub->add_option("--tier-size", opt.tier_size, "Nodes per class in each tier")
        ->check(CLI::PositiveNumber);
    sub->add_option("--fraction", opt.fractions, "Class-balanced fraction in (0, 1]; repeatable")
        ->allow_extra_args(false);
  };
  auto add_analysis = [&](CLI::App* sub) {
    sub->add_option("--subset", opt.subset, "Subset to overlay (.json manifest or id lines)");
    sub->add_flag("--sqrt-scale", opt.sqrt_scale, "Square-root y axis for histogram SVG");
  };

  auto* build = app.add_subcommand("build-graph", "Build thresholded similarity graphs");
  add_graph_input(build, false);
  add_out(build);

  auto* decompose = app.add_subcommand("decompose", "Coreness, round and RD for every node");
  add_graph_input(decompose, true);
  add_out(decompose);
  auto* decompose_format = decompose->add_option("--format", opt.format, "csv or json")
                               ->check(CLI::IsMember({"csv", "json"}));

  auto* select = app.add_subcommand("select", "High/Medium/Low tiers and fraction subsets");
  select->add_option("input", opt.input, "Decomposition CSV or JSON")->required();
  add_selection(select);
  add_out(select);

  auto* analyze = app.add_subcommand("analyze", "Coreness histograms and radial layouts");
  add_graph_input(analyze, true);
  add_out(analyze);
  add_analysis(analyze);
  auto* analyze_format = analyze->add_option("--format", opt.format, "svg, csv or json")
                             ->check(CLI::IsMember({"svg", "csv", "json"}));

  auto* pipeline = app.add_subcommand("pipeline", "build-graph, decompose, select and analyze");
  add_graph_input(pipeline, false);
  add_out(pipeline);
  add_selection(pipeline);
  add_analysis(pipeline);
  auto* pipeline_format = pipeline->add_option("--format", opt.format, "svg, csv or json")
                              ->check(CLI::IsMember({"svg", "csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  try {
    if (*build) {
      cmd_build_graph(opt, out, err);
    } else if (*decompose) {
      if (decompose_format->count() == 0) opt.format = "csv";
      cmd_decompose(opt, out, err);
    } else if (*select) {
      cmd_select(opt, out, err);
    } else if (*analyze) {
      if (analyze_format->count() == 0) opt.format = "svg";
      cmd_analyze(opt, out, err);
    } else if (*pipeline) {
      if (pipeline_format->count() == 0) opt.format = "svg";
      cmd_pipeline(opt, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace rkcore::cli
