// One line per criterion: PASS|FAIL <name>: <measurements>. Exit status is
// the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "b2n/pipeline.hpp"
#include "b2n/synth.hpp"

using namespace b2n;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  failures += ok ? 0 : 1;
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << v;
  return s.str();
}

std::vector<std::string> names_of(const MixedGraph& g) {
  std::vector<std::string> out;
  for (const auto& n : g.nodes()) out.push_back(n.id);
  return out;
}

void fig3_golden() {
  const auto t0 = Clock::now();
  const MixedGraph dag = graph_from_json(read_json_file(std::string(B2N_FIXTURE_DIR) + "/fig3_oracle.json"));
  auto src = IndependenceSource::from_dag(dag);
  const LearnResult r = learn_structure(src, names_of(dag));
  const double secs = seconds_since(t0);
  const MixedGraph& g = r.latent.graph;
  std::set<std::string> edges;
  for (const Edge& e : g.edges()) edges.insert(g.node(e.from).id + "->" + g.node(e.to).id);
  const std::set<std::string> expected{"H2_1->C",    "H2_1->E",    "H2_2->D", "H2_2->E",    "H0_1->A",
                                       "H0_1->H2_1", "H0_1->H2_2", "H0_2->B", "H0_2->H2_1", "H0_2->H2_2"};
  std::map<int, int> per_layer;
  for (NodeIndex v : r.latent.latents()) ++per_layer[*g.node(v).layer_order];
  const bool layers_ok = per_layer == std::map<int, int>{{0, 2}, {2, 2}};
  const bool groups_ok = r.latent.gather_groups == std::vector<NodeSet>{{0}, {1}, {2}, {3}, {4}};
  const bool ok = edges == expected && layers_ok && groups_ok && secs < 1.0;
  report(ok, "fig3-golden",
         "edges " + std::string(edges == expected ? "match" : "differ") + ", layers " + (layers_ok ? "{0:2,2:2}" : "wrong") +
             ", gather groups " + (groups_ok ? "{A},{B},{C},{D},{E}" : "wrong") + ", " + fmt(secs, 4) + " s (limit 1 s)");
}

void propositions_suite() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, violations = 0, violating_instances = 0;
  std::size_t with_bidirected = 0, control_hits = 0;
  std::map<int, std::size_t> by_prop;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const LatentDAG l = random_latent_dag(8, 6, seed);
    const InverseGraph inv = build_stochastic_inverse(l);
    const DiscriminativeGraph d = build_discriminative(inv);
    PreservationOptions opt;
    opt.max_condition_size = 3;
    const PreservationReport r = verify_preservation(l, inv, d, opt);
    checked += r.checked;
    violations += r.violations.size();
    violating_instances += r.violations.empty() ? 0 : 1;
    for (const auto& v : r.violations) ++by_prop[v.prop];
    if (inv.graph.edge_count(EdgeKind::Bidirected) > 0) {
      ++with_bidirected;
      opt.condition_on_class = false;
      const PreservationReport control = verify_preservation(l, inv, d, opt);
      bool p2 = false;
      for (const auto& v : control.violations) p2 = p2 || v.prop == 2;
      control_hits += p2 ? 1 : 0;
    }
  }
  const double secs = seconds_since(t0);
  const bool control_ok = with_bidirected > 0 && 2 * control_hits >= with_bidirected;
  const bool ok = violations == 0 && control_ok && secs < 300.0;
  report(ok, "propositions-1-3",
         std::to_string(violations) + " violations (P1 " + std::to_string(by_prop[1]) + ", P2 " + std::to_string(by_prop[2]) +
             ", P3 " + std::to_string(by_prop[3]) + ") in " + std::to_string(violating_instances) +
             "/200 instances over " + std::to_string(checked) + " queries; negative control fired on " +
             std::to_string(control_hits) + "/" + std::to_string(with_bidirected) +
             " instances with bidirected edges; " + fmt(secs) + " s (limit 300 s)");
}

void large_sample_recovery() {
  const auto t0 = Clock::now();
  int good = 0;
  std::string distances;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DiscreteBN bn = random_bn(6, 2, 2, seed);
    auto data = std::make_shared<const Dataset>(ancestral_sample(bn, 100000, seed + 1));
    auto src = IndependenceSource::from_data(data, TestKind::G2, 0.01);
    const LearnResult r = learn_structure(src, names_of(bn.dag));
    const std::size_t shd = structural_distance(r.aux.graph, true_cpdag(bn));
    good += shd <= 1 ? 1 : 0;
    distances += (seed ? "," : "") + std::to_string(shd);
  }
  report(good >= 17, "large-sample-recovery",
         std::to_string(good) + "/20 networks within SHD 1 (need 17); SHD per seed [" + distances + "]; " +
             fmt(seconds_since(t0)) + " s");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "b2n_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = B2N_CLI_PATH;
  const std::string fixture = std::string(B2N_FIXTURE_DIR) + "/fig3_oracle.json";
  auto sh = [](const std::string& cmd) { return std::system(cmd.c_str()) == 0; };
  bool ran = sh(cli + " sample --nodes 8 --max-parents 2 --rows 20000 --seed 11 --out " + (root / "data").string());
  std::vector<std::pair<std::string, std::string>> runs = {
      {"oracle", "--input " + fixture + " --test oracle --verify"},
      {"g2", "--input " + (root / "data" / "data.csv").string() + " --test g2 --alpha 0.01 --verify"}};
  std::size_t files = 0, identical = 0;
  for (const auto& [name, args] : runs) {
    for (const char* rep : {"a", "b"}) {
      ran = ran && sh(cli + " pipeline " + args + " --out " + (root / (name + rep)).string());
    }
    for (const char* artifact : {"generative.json", "inverse.json", "discriminative.json", "architecture.json",
                                 "trace.jsonl", "verification.json"}) {
      ++files;
      const fs::path a = root / (name + "a") / artifact;
      const fs::path b = root / (name + "b") / artifact;
      identical += fs::exists(a) && slurp(a) == slurp(b) ? 1 : 0;
    }
  }
  report(ran && identical == files, "determinism",
         std::to_string(identical) + "/" + std::to_string(files) + " artifact files byte-identical across repeated runs" +
             (ran ? "" : " (a pipeline run failed)"));
}

void fuzzed_invariants() {
  const auto t0 = Clock::now();
  std::size_t bad = 0, latents = 0;
  std::string first;
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + rng() % 10;
    const std::size_t max_parents = 1 + rng() % std::min<std::size_t>(n - 1, 4);
    const DiscreteBN bn = random_bn(n, max_parents, 2, rng());
    auto src = IndependenceSource::from_dag(bn.dag);
    const LearnResult r = learn_structure(src, names_of(bn.dag));
    latents += r.latent.latents().size();
    const auto problems = latent_dag_violations(r.latent);
    if (!problems.empty()) {
      if (!bad) first = " first: " + problems.front();
      ++bad;
    }
  }
  report(bad == 0, "fuzzed-invariants",
         std::to_string(1000 - bad) + "/1000 oracle inputs keep the gather partition, layer monotonicity and root "
                                      "invariants (" + std::to_string(latents) + " latents total); " +
             fmt(seconds_since(t0)) + " s" + first);
}

void performance() {
  const DiscreteBN bn = random_bn(64, 2, 2, 64);
  auto data = std::make_shared<const Dataset>(ancestral_sample(bn, 10000, 65));
  const auto t0 = Clock::now();
  auto src = IndependenceSource::from_data(data, TestKind::G2, 0.01);
  const LearnResult r = learn_structure(src, names_of(bn.dag));
  const double secs = seconds_since(t0);
  report(secs < 60.0, "performance-64x10k",
         fmt(secs) + " s for 64 variables x 10000 rows (limit 60 s); " + std::to_string(src.evaluations()) +
             " tests, " + std::to_string(r.latent.latents().size()) + " latents");
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)()> criteria[] = {
      {"fig3-golden", fig3_golden},           {"propositions-1-3", propositions_suite},
      {"large-sample-recovery", large_sample_recovery}, {"determinism", determinism},
      {"fuzzed-invariants", fuzzed_invariants}, {"performance-64x10k", performance}};
  for (const auto& [name, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  }
  return failures;
}
