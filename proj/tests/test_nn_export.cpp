#include <gtest/gtest.h>

#include "b2n/nn_export.hpp"
#include "b2n/synth.hpp"
#include "support.hpp"

using namespace b2n;

namespace {

struct Triple {
  LatentDAG l;
  DiscriminativeGraph d;
};

Triple fig3() {
  auto dag = b2n::testing::dag_from({"A", "B", "C", "D", "E"}, {{"A", "C"}, {"B", "C"}, {"A", "D"}, {"B", "D"}, {"A", "E"},
                                                               {"B", "E"}, {"C", "E"}, {"D", "E"}});
  auto src = IndependenceSource::from_dag(dag);
  LatentDAG l = learn_structure(src, {"A", "B", "C", "D", "E"}).latent;
  DiscriminativeGraph d = build_discriminative(build_stochastic_inverse(l));
  return {std::move(l), std::move(d)};
}

ExportConfig config(int width, int classes) {
  ExportConfig c;
  c.neurons_per_layer = width;
  c.num_classes = classes;
  return c;
}

}  // namespace

TEST(ExportArchitecture, Fig3) {
  const Triple t = fig3();
  const ArchitectureSpec a = export_architecture(t.d, t.l.gather_groups, config(16, 2));
  EXPECT_EQ(a.input_dim, 5u);
  std::size_t gathers = 0, dense = 0;
  for (const auto& l : a.layers) {
    gathers += l.kind == LayerKind::Gather ? 1 : 0;
    dense += l.kind == LayerKind::Dense ? 1 : 0;
    if (l.kind == LayerKind::Dense) EXPECT_EQ(l.width, 16);
  }
  EXPECT_EQ(gathers, 5u);
  EXPECT_EQ(dense, 4u);
  const Layer& head = a.layers.back();
  EXPECT_EQ(head.kind, LayerKind::Softmax);
  EXPECT_EQ(head.inputs, (std::vector<std::string>{"H0_1", "H0_2"}));
  EXPECT_EQ(fan_in(a, head), 32u);
  // H2_1 reads the gathers of C and E, H0_1 reads A, H2_1 and H2_2.
  EXPECT_EQ(a.find("H2_1")->inputs, (std::vector<std::string>{"gather_2", "gather_4"}));
  EXPECT_EQ(a.find("H0_1")->inputs, (std::vector<std::string>{"gather_0", "H2_1", "H2_2"}));
  EXPECT_EQ(a.find("H0_1")->layer_order, 0);
  EXPECT_EQ(a.find("H2_1")->layer_order, 2);
  EXPECT_TRUE(validate_architecture(a).ok());
  // 4 dense layers: 2 * 16 * (2 + 1) + 2 * 16 * (1 + 32 + 1); softmax 2 * (32 + 1).
  EXPECT_EQ(parameter_count(a), 2u * 16 * 3 + 2u * 16 * 34 + 2u * 33);
}

TEST(ExportArchitecture, NoLatents) {
  LatentDAG l;
  for (auto id : {"A", "B", "C"}) l.graph.add_node(NodeRef::observed(id));
  l.gather_groups = {{0, 1, 2}};
  const DiscriminativeGraph d = build_discriminative(build_stochastic_inverse(l));
  const ArchitectureSpec a = export_architecture(d, l.gather_groups, config(8, 3));
  ASSERT_EQ(a.layers.size(), 2u);
  EXPECT_EQ(a.layers[0].indices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(a.layers[1].inputs, (std::vector<std::string>{"gather_0"}));
  EXPECT_TRUE(validate_architecture(a).ok());
  EXPECT_EQ(parameter_count(a), 3u * 4);
}

TEST(ExportArchitecture, SingleLatentChain) {
  LatentDAG l;
  l.graph.add_node(NodeRef::observed("X"));
  l.graph.add_node(NodeRef::latent("H", 0));
  l.graph.add_directed(1, 0);
  l.gather_groups = {{0}};
  const DiscriminativeGraph d = build_discriminative(build_stochastic_inverse(l));
  const ArchitectureSpec a = export_architecture(d, l.gather_groups, config(8, 2));
  ASSERT_EQ(a.layers.size(), 3u);
  EXPECT_EQ(a.layers[1].kind, LayerKind::Dense);
  EXPECT_EQ(a.layers[1].inputs, (std::vector<std::string>{"gather_0"}));
  EXPECT_EQ(a.layers[2].inputs, (std::vector<std::string>{"H"}));
}

TEST(ExportArchitecture, Errors) {
  const Triple t = fig3();
  EXPECT_THROW(export_architecture(t.d, {{0, 1}, {1, 2, 3, 4}}, config(4, 2)), Error);
  EXPECT_THROW(export_architecture(t.d, {{0, 1}}, config(4, 2)), Error);
  EXPECT_THROW(export_architecture(t.d, t.l.gather_groups, config(0, 2)), Error);
  DiscriminativeGraph broken = t.d;
  const NodeIndex h = broken.graph.at("H2_1");
  for (NodeIndex p : broken.graph.parents(h)) broken.graph.remove_edge(p, h);
  EXPECT_THROW(export_architecture(broken, t.l.gather_groups, config(4, 2)), Error);
}

TEST(ValidateArchitecture, PartitionViolation) {
  const Triple t = fig3();
  ArchitectureSpec a = export_architecture(t.d, t.l.gather_groups, config(4, 2));
  a.input_dim = 6;
  a.layers[0].indices = {0, 5};
  a.layers[1].indices = {1, 5};
  const ValidationReport r = validate_architecture(a);
  ASSERT_FALSE(r.ok());
  bool partition = false;
  for (const auto& f : r.failures) partition = partition || f.find("partition violation") != std::string::npos;
  EXPECT_TRUE(partition);
}

TEST(ValidateArchitecture, Cycle) {
  const Triple t = fig3();
  ArchitectureSpec a = export_architecture(t.d, t.l.gather_groups, config(4, 2));
  for (auto& l : a.layers) {
    if (l.id == "H2_1") l.inputs.push_back("H0_1");
  }
  const ValidationReport r = validate_architecture(a);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(std::find(r.failures.begin(), r.failures.end(), "layer references are not a DAG"), r.failures.end());
}

TEST(ValidateArchitecture, OtherInvariants) {
  const Triple t = fig3();
  const ArchitectureSpec good = export_architecture(t.d, t.l.gather_groups, config(4, 2));
  ArchitectureSpec a = good;
  a.layers[6].width = 5;
  EXPECT_FALSE(validate_architecture(a).ok());
  a = good;
  a.layers.push_back(a.layers.back());
  a.layers.back().id = "Y2";
  EXPECT_FALSE(validate_architecture(a).ok());
  a = good;
  a.layers.back().inputs = {"H0_1"};
  EXPECT_FALSE(validate_architecture(a).ok());  // H0_2 no longer reaches the head
}

TEST(ArchitectureJson, ExactFormatAndRoundTrip) {
  const Triple t = fig3();
  const ArchitectureSpec a = export_architecture(t.d, t.l.gather_groups, config(16, 2));
  const Json j = architecture_to_json(a);
  EXPECT_EQ(j["layers"][0].dump(), R"({"id":"gather_0","kind":"gather","indices":[0]})");
  EXPECT_EQ(j["layers"].back().dump(), R"({"id":"Y","kind":"softmax","classes":2,"inputs":["H0_1","H0_2"]})");
  EXPECT_EQ(j.begin().key(), "input_dim");
  const Json dense = j["layers"][5];
  EXPECT_EQ(dense["kind"], "dense");
  EXPECT_EQ(dense["activation"], "relu");
  EXPECT_TRUE(dense.contains("layer_order"));
  EXPECT_EQ(architecture_from_json(j), a);
  EXPECT_EQ(architecture_to_json(export_architecture(t.d, t.l.gather_groups, config(16, 2))).dump(), j.dump());
}

TEST(ParameterCount, StrictlyMonotoneInWidth) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const LatentDAG l = random_latent_dag(8, 6, seed);
    const DiscriminativeGraph d = build_discriminative(build_stochastic_inverse(l));
    std::size_t prev = 0;
    for (int w = 1; w < 40; w += 3) {
      const ArchitectureSpec a = export_architecture(d, l.gather_groups, config(w, 10));
      ASSERT_TRUE(validate_architecture(a).ok());
      const std::size_t p = parameter_count(a);
      if (!l.latents().empty()) EXPECT_GT(p, prev);
      prev = p;
    }
  }
}

// The dense-layer dependency graph mirrors the latent subgraph of d.
TEST(ExportArchitecture, DenseGraphMatchesLatentSubgraph) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const LatentDAG l = random_latent_dag(8, 6, seed);
    const DiscriminativeGraph d = build_discriminative(build_stochastic_inverse(l));
    const ArchitectureSpec a = export_architecture(d, l.gather_groups, config(4, 2));
    std::set<std::pair<std::string, std::string>> from_arch, from_graph;
    for (const auto& layer : a.layers) {
      if (layer.kind == LayerKind::Gather) continue;
      for (const auto& in : layer.inputs) {
        if (a.find(in)->kind != LayerKind::Gather) from_arch.insert({in, layer.id});
      }
    }
    for (const Edge& e : d.graph.edges()) {
      if (d.graph.node(e.from).kind == NodeKind::Latent) from_graph.insert({d.graph.node(e.from).id, d.graph.node(e.to).id});
    }
    EXPECT_EQ(from_arch, from_graph) << "seed " << seed;
  }
}
