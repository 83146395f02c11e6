#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "b2n/dataset.hpp"
#include "b2n/inverse.hpp"
#include "b2n/nn_export.hpp"
#include "b2n/structure_learner.hpp"

namespace b2n {

inline Json gather_groups_to_json(const MixedGraph& g, const std::vector<NodeSet>& groups) {
  Json out = Json::array();
  for (const auto& grp : groups) out.push_back(ids_json(g, grp));
  return out;
}

inline std::vector<NodeSet> gather_groups_from_json(const MixedGraph& g, const Json& j) {
  std::vector<NodeSet> groups;
  try {
    for (const auto& grp : j) {
      NodeSet s;
      for (const auto& id : grp) s.push_back(g.at(id.get<std::string>()));
      groups.push_back(make_set(std::move(s)));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed gather groups: ") + e.what());
  }
  return groups;
}

inline Json latent_dag_to_json(const LatentDAG& l) {
  Json j = graph_to_json(l.graph);
  j["gather_groups"] = gather_groups_to_json(l.graph, l.gather_groups);
  return j;
}

inline LatentDAG latent_dag_from_json(const Json& j) {
  LatentDAG l;
  l.graph = graph_from_json(j);
  if (!j.contains("gather_groups")) throw Error(ErrorCode::InvalidArgument, "generative graph lacks gather_groups");
  l.gather_groups = gather_groups_from_json(l.graph, j.at("gather_groups"));
  const auto problems = latent_dag_violations(l);
  if (!problems.empty()) throw Error(ErrorCode::GraphInvariant, "invalid generative graph: " + problems.front());
  return l;
}

// Inverse and discriminative graphs carry the gather groups along so that
// each stage can run from the previous stage's file alone.
inline Json inverse_to_json(const InverseGraph& inv, const std::vector<NodeSet>& groups) {
  Json j = graph_to_json(inv.graph);
  j["gather_groups"] = gather_groups_to_json(inv.graph, groups);
  return j;
}

inline Json discriminative_to_json(const DiscriminativeGraph& d, const std::vector<NodeSet>& groups) {
  Json j = graph_to_json(d.graph);
  j["gather_groups"] = gather_groups_to_json(d.graph, groups);
  return j;
}

inline DiscriminativeGraph discriminative_from_graph(MixedGraph g) {
  std::optional<NodeIndex> y;
  for (NodeIndex v = 0; v < g.size(); ++v) {
    if (g.node(v).kind != NodeKind::Class) continue;
    if (y) throw Error(ErrorCode::GraphInvariant, "discriminative graph has more than one class node");
    y = v;
  }
  if (!y) throw Error(ErrorCode::GraphInvariant, "discriminative graph has no class node");
  return {std::move(g), *y};
}

struct PipelineConfig {
  std::string input;
  std::optional<std::string> schema;
  TestKind test = TestKind::G2;
  double alpha = kDefaultAlpha;
  int neurons_per_layer = 16;
  int num_classes = 2;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool verify = false;
  std::size_t max_condition_size = 3;
};

inline void check_config(const PipelineConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  if (cfg.neurons_per_layer <= 0) throw Error(ErrorCode::InvalidArgument, "width must be positive");
  if (cfg.num_classes <= 0) throw Error(ErrorCode::InvalidArgument, "classes must be positive");
}

struct LearnOutput {
  LearnResult result;
  TraceLog trace;
};

/// Runs the learner on a CSV dataset, or on a DAG JSON file for the oracle
/// test (every node observed).
inline LearnOutput learn_from_input(const PipelineConfig& cfg) {
  check_config(cfg);
  LearnOutput out;
  if (cfg.test == TestKind::Oracle) {
    const MixedGraph dag = graph_from_json(read_json_file(cfg.input));
    if (!dag.is_dag()) throw Error(ErrorCode::GraphInvariant, "oracle input is not a DAG");
    std::vector<std::string> names;
    for (const auto& node : dag.nodes()) {
      if (node.kind != NodeKind::Observed) {
        throw Error(ErrorCode::InvalidArgument, "oracle DAG node '" + node.id + "' is not observed");
      }
      names.push_back(node.id);
    }
    auto src = IndependenceSource::from_dag(dag);
    out.result = learn_structure(src, names, &out.trace);
    return out;
  }
  LoadOptions opts;
  if (cfg.schema) opts.overrides = parse_schema_overrides(read_json_file(*cfg.schema));
  auto data = std::make_shared<const Dataset>(load_dataset(cfg.input, opts));
  if (data->column_count() == 0) throw Error(ErrorCode::EmptyFile, "empty file");
  std::vector<std::string> names;
  for (std::size_t c = 0; c < data->column_count(); ++c) names.push_back(data->column(c).name);
  auto src = IndependenceSource::from_data(data, cfg.test, cfg.alpha);
  out.result = learn_structure(src, names, &out.trace);
  return out;
}

inline Json verification_to_json(const PreservationReport& r, const MixedGraph& g, std::size_t max_cond) {
  Json j = preservation_report_to_json(r, g);
  j["max_condition_size"] = max_cond;
  return j;
}

inline PreservationReport verify_generative(const LatentDAG& l, std::size_t max_cond) {
  const InverseGraph inv = build_stochastic_inverse(l);
  const DiscriminativeGraph d = build_discriminative(inv);
  PreservationOptions opt;
  opt.max_condition_size = max_cond;
  return verify_preservation(l, inv, d, opt);
}

inline std::string artifact_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, "cannot create output directory '" + dir + "'");
}

/// Full flow: learn, invert, discriminate, export and optionally verify.
/// Writes every artifact into cfg.out_dir.
inline void run_pipeline(const PipelineConfig& cfg) {
  check_config(cfg);
  LearnOutput learned = learn_from_input(cfg);
  const LatentDAG& l = learned.result.latent;
  const InverseGraph inv = build_stochastic_inverse(l);
  const DiscriminativeGraph d = build_discriminative(inv);
  ExportConfig ecfg;
  ecfg.neurons_per_layer = cfg.neurons_per_layer;
  ecfg.num_classes = cfg.num_classes;
  const ArchitectureSpec arch = export_architecture(d, l.gather_groups, ecfg);
  std::optional<Json> verification;
  if (cfg.verify) verification = verification_to_json(verify_generative(l, cfg.max_condition_size), l.graph, cfg.max_condition_size);

  ensure_dir(cfg.out_dir);
  write_json_file(artifact_path(cfg.out_dir, "generative.json"), latent_dag_to_json(l));
  write_json_file(artifact_path(cfg.out_dir, "inverse.json"), inverse_to_json(inv, l.gather_groups));
  write_json_file(artifact_path(cfg.out_dir, "discriminative.json"), discriminative_to_json(d, l.gather_groups));
  write_json_file(artifact_path(cfg.out_dir, "architecture.json"), architecture_to_json(arch));
  write_text_file(artifact_path(cfg.out_dir, "trace.jsonl"), learned.trace.text());
  if (verification) write_json_file(artifact_path(cfg.out_dir, "verification.json"), *verification);
}

inline Json error_to_json(const Error& e) {
  return Json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
}

}  // namespace b2n
