#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "b2n/pipeline.hpp"
#include "b2n/synth.hpp"
#include "log.hpp"

using namespace b2n;
using cli::Level;

namespace {

const std::map<std::string, TestKind> kTestNames = {
    {"g2", TestKind::G2}, {"fisher-z", TestKind::FisherZ}, {"oracle", TestKind::Oracle}};

struct SampleOptions {
  std::optional<std::string> network;
  std::size_t rows = 1000;
  std::size_t nodes = 6;
  std::size_t max_parents = 2;
  int card = 2;
};

void add_learn_flags(CLI::App* app, PipelineConfig& cfg, std::string& test) {
  app->add_option("--input", cfg.input, "CSV dataset, or DAG JSON with --test oracle")->required();
  app->add_option("--schema", cfg.schema, "JSON column overrides: {\"col\": \"categorical:K\" | \"continuous\"}");
  app->add_option("--test", test, "independence test: g2, fisher-z or oracle")
      ->check(CLI::IsMember({"g2", "fisher-z", "oracle"}));
  app->add_option("--alpha", cfg.alpha, "significance level")->check(CLI::Range(0.0, 1.0));
  app->add_option("--seed", cfg.seed, "random seed");
}

void add_export_flags(CLI::App* app, PipelineConfig& cfg) {
  app->add_option("--width", cfg.neurons_per_layer, "neurons per dense layer")->check(CLI::PositiveNumber);
  app->add_option("--classes", cfg.num_classes, "softmax classes")->check(CLI::PositiveNumber);
}

void add_out_flag(CLI::App* app, PipelineConfig& cfg) { app->add_option("--out", cfg.out_dir, "output directory"); }

void learn(const PipelineConfig& cfg) {
  LearnOutput learned = learn_from_input(cfg);
  ensure_dir(cfg.out_dir);
  write_json_file(artifact_path(cfg.out_dir, "generative.json"), latent_dag_to_json(learned.result.latent));
  write_text_file(artifact_path(cfg.out_dir, "trace.jsonl"), learned.trace.text());
  cli::log(Level::Info, "learned structure",
           {{"latents", learned.result.latent.latents().size()}, {"gather_groups", learned.result.latent.gather_groups.size()}});
}

void invert(const PipelineConfig& cfg) {
  const LatentDAG l = latent_dag_from_json(read_json_file(cfg.input));
  ensure_dir(cfg.out_dir);
  write_json_file(artifact_path(cfg.out_dir, "inverse.json"), inverse_to_json(build_stochastic_inverse(l), l.gather_groups));
}

void discriminate(const PipelineConfig& cfg) {
  const Json j = read_json_file(cfg.input);
  const InverseGraph inv{graph_from_json(j)};
  const auto groups = gather_groups_from_json(inv.graph, j.value("gather_groups", Json::array()));
  ensure_dir(cfg.out_dir);
  write_json_file(artifact_path(cfg.out_dir, "discriminative.json"), discriminative_to_json(build_discriminative(inv), groups));
}

void export_nn(const PipelineConfig& cfg) {
  const Json j = read_json_file(cfg.input);
  const DiscriminativeGraph d = discriminative_from_graph(graph_from_json(j));
  const auto groups = gather_groups_from_json(d.graph, j.value("gather_groups", Json::array()));
  ExportConfig ecfg;
  ecfg.neurons_per_layer = cfg.neurons_per_layer;
  ecfg.num_classes = cfg.num_classes;
  const ArchitectureSpec arch = export_architecture(d, groups, ecfg);
  const ValidationReport report = validate_architecture(arch);
  for (const auto& f : report.failures) cli::log(Level::Warn, "architecture check failed", {{"failure", f}});
  ensure_dir(cfg.out_dir);
  write_json_file(artifact_path(cfg.out_dir, "architecture.json"), architecture_to_json(arch));
  cli::log(Level::Info, "exported architecture", {{"parameters", parameter_count(arch)}});
}

void verify(const PipelineConfig& cfg) {
  const LatentDAG l = latent_dag_from_json(read_json_file(cfg.input));
  const PreservationReport r = verify_generative(l, cfg.max_condition_size);
  ensure_dir(cfg.out_dir);
  write_json_file(artifact_path(cfg.out_dir, "verification.json"), verification_to_json(r, l.graph, cfg.max_condition_size));
  if (!r.violations.empty()) cli::log(Level::Warn, "dependence not preserved", {{"violations", r.violations.size()}});
  std::cout << Json{{"checked", r.checked}, {"violations", r.violations.size()}}.dump() << '\n';
}

void sample(const PipelineConfig& cfg, const SampleOptions& opt) {
  const DiscreteBN bn = opt.network ? bn_from_json(read_json_file(*opt.network))
                                    : random_bn(opt.nodes, opt.max_parents, opt.card, cfg.seed);
  const Dataset data = ancestral_sample(bn, opt.rows, cfg.seed);
  ensure_dir(cfg.out_dir);
  write_json_file(artifact_path(cfg.out_dir, "network.json"), bn_to_json(bn));
  write_text_file(artifact_path(cfg.out_dir, "data.csv"), to_csv(data));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn deep network structure from conditional independencies"};
  app.require_subcommand(1);
  PipelineConfig cfg;
  SampleOptions sopt;
  std::string test = "g2";

  auto* pipeline = app.add_subcommand("pipeline", "learn, invert, discriminate and export in one run");
  add_learn_flags(pipeline, cfg, test);
  add_export_flags(pipeline, cfg);
  add_out_flag(pipeline, cfg);
  pipeline->add_flag("--verify", cfg.verify, "also check dependence preservation");
  pipeline->add_option("--max-cond", cfg.max_condition_size, "largest condition set in verification");

  auto* learn_cmd = app.add_subcommand("learn", "learn the generative structure");
  add_learn_flags(learn_cmd, cfg, test);
  add_out_flag(learn_cmd, cfg);

  auto* invert_cmd = app.add_subcommand("invert", "stochastic inverse of generative.json");
  invert_cmd->add_option("--input", cfg.input, "generative.json")->required();
  add_out_flag(invert_cmd, cfg);

  auto* disc_cmd = app.add_subcommand("discriminate", "discriminative graph from inverse.json");
  disc_cmd->add_option("--input", cfg.input, "inverse.json")->required();
  add_out_flag(disc_cmd, cfg);

  auto* export_cmd = app.add_subcommand("export-nn", "architecture from discriminative.json");
  export_cmd->add_option("--input", cfg.input, "discriminative.json")->required();
  add_export_flags(export_cmd, cfg);
  add_out_flag(export_cmd, cfg);

  auto* verify_cmd = app.add_subcommand("verify", "check dependence preservation for generative.json");
  verify_cmd->add_option("--input", cfg.input, "generative.json")->required();
  verify_cmd->add_option("--max-cond", cfg.max_condition_size, "largest condition set");
  add_out_flag(verify_cmd, cfg);

  auto* sample_cmd = app.add_subcommand("sample", "sample a discrete Bayesian network to CSV");
  sample_cmd->add_option("--input", sopt.network, "network JSON; a random network is drawn when absent");
  sample_cmd->add_option("--rows", sopt.rows, "rows to sample");
  sample_cmd->add_option("--nodes", sopt.nodes, "nodes of the random network");
  sample_cmd->add_option("--max-parents", sopt.max_parents, "parent bound of the random network");
  sample_cmd->add_option("--card", sopt.card, "cardinality of every variable")->check(CLI::Range(2, 20));
  sample_cmd->add_option("--seed", cfg.seed, "random seed");
  add_out_flag(sample_cmd, cfg);

  CLI11_PARSE(app, argc, argv);
  cfg.test = kTestNames.at(test);

  try {
    if (*pipeline) run_pipeline(cfg);
    if (*learn_cmd) learn(cfg);
    if (*invert_cmd) invert(cfg);
    if (*disc_cmd) discriminate(cfg);
    if (*export_cmd) export_nn(cfg);
    if (*verify_cmd) verify(cfg);
    if (*sample_cmd) sample(cfg, sopt);
  } catch (const Error& e) {
    std::cerr << error_to_json(e).dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 0;
}
