#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "b2n/inverse.hpp"

namespace b2n {

enum class LayerKind { Gather, Dense, Softmax };

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Gather: return "gather";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

struct Layer {
  std::string id;
  LayerKind kind = LayerKind::Dense;
  std::vector<std::size_t> indices;  // gather
  int width = 0;                     // dense
  int classes = 0;                   // softmax
  std::vector<std::string> inputs;   // dense, softmax
  int layer_order = 0;               // dense

  bool operator==(const Layer&) const = default;
};

struct ArchitectureSpec {
  std::size_t input_dim = 0;
  std::vector<Layer> layers;

  const Layer* find(std::string_view id) const {
    for (const auto& l : layers) {
      if (l.id == id) return &l;
    }
    return nullptr;
  }

  bool operator==(const ArchitectureSpec&) const = default;
};

struct ExportConfig {
  int neurons_per_layer = 16;
  int num_classes = 2;
  std::optional<std::vector<std::string>> input_names;
};

inline std::string gather_layer_id(std::size_t k) { return "gather_" + std::to_string(k); }

/// Builds the feed-forward description of d. Observed nodes of d map to
/// input positions in index order; gather_groups hold node indices of d.
inline ArchitectureSpec export_architecture(const DiscriminativeGraph& d, const std::vector<NodeSet>& gather_groups,
                                            const ExportConfig& cfg) {
  if (cfg.neurons_per_layer <= 0) throw Error(ErrorCode::InvalidArgument, "neurons per layer must be positive");
  if (cfg.num_classes <= 0) throw Error(ErrorCode::InvalidArgument, "number of classes must be positive");
  const MixedGraph& g = d.graph;
  if (d.class_node >= g.size() || g.node(d.class_node).kind != NodeKind::Class) {
    throw Error(ErrorCode::InvalidArgument, "discriminative graph has no class node");
  }
  if (g.edge_count(EdgeKind::Directed) != g.edges().size() || !g.directed_acyclic()) {
    throw Error(ErrorCode::GraphInvariant, "discriminative graph must be a DAG");
  }

  std::map<NodeIndex, std::size_t> input_index;
  for (NodeIndex v = 0; v < g.size(); ++v) {
    if (g.node(v).kind == NodeKind::Observed) input_index.emplace(v, input_index.size());
  }
  if (cfg.input_names) {
    if (cfg.input_names->size() != input_index.size()) {
      throw Error(ErrorCode::InvalidArgument, "input names do not match the observed nodes");
    }
    for (const auto& [v, k] : input_index) {
      if ((*cfg.input_names)[k] != g.node(v).id) {
        throw Error(ErrorCode::InvalidArgument, "input " + std::to_string(k) + " is named '" + (*cfg.input_names)[k] +
                                                    "' but the graph has '" + g.node(v).id + "'");
      }
    }
  }

  ArchitectureSpec spec;
  spec.input_dim = input_index.size();
  std::map<NodeIndex, std::string> layer_of;
  for (std::size_t k = 0; k < gather_groups.size(); ++k) {
    Layer l{gather_layer_id(k), LayerKind::Gather};
    if (gather_groups[k].empty()) throw Error(ErrorCode::InvalidArgument, "empty gather group");
    for (NodeIndex v : gather_groups[k]) {
      auto it = input_index.find(v);
      if (it == input_index.end()) {
        throw Error(ErrorCode::InvalidArgument, "gather group member " + std::to_string(v) + " is not an observed node");
      }
      if (!layer_of.emplace(v, l.id).second) {
        throw Error(ErrorCode::InvalidArgument, "observed node '" + g.node(v).id + "' gathered twice");
      }
      l.indices.push_back(it->second);
    }
    std::sort(l.indices.begin(), l.indices.end());
    spec.layers.push_back(std::move(l));
  }
  if (layer_of.size() != input_index.size()) {
    throw Error(ErrorCode::InvalidArgument, "gather groups do not cover every observed node");
  }

  auto inputs_of = [&](NodeIndex v) {
    std::vector<std::string> ins;
    for (NodeIndex p : g.parents(v)) {
      const std::string& id = layer_of.at(p);
      if (std::find(ins.begin(), ins.end(), id) == ins.end()) ins.push_back(id);
    }
    return ins;
  };
  const std::vector<NodeIndex> order = *g.topological_order();
  for (NodeIndex v : order) {
    const NodeRef& node = g.node(v);
    if (node.kind != NodeKind::Latent) continue;
    if (g.parents(v).empty()) {
      throw Error(ErrorCode::GraphInvariant, "latent '" + node.id + "' has no parents in the discriminative graph");
    }
    Layer l{node.id, LayerKind::Dense};
    l.width = cfg.neurons_per_layer;
    l.inputs = inputs_of(v);
    l.layer_order = node.layer_order.value_or(0);
    layer_of.emplace(v, l.id);
    spec.layers.push_back(std::move(l));
  }
  Layer head{g.node(d.class_node).id, LayerKind::Softmax};
  head.classes = cfg.num_classes;
  head.inputs = inputs_of(d.class_node);
  if (head.inputs.empty()) throw Error(ErrorCode::GraphInvariant, "class node has no parents");
  spec.layers.push_back(std::move(head));
  return spec;
}

/// Output width of each layer; unknown references are skipped.
inline std::map<std::string, std::size_t> layer_widths(const ArchitectureSpec& a) {
  std::map<std::string, std::size_t> w;
  for (const auto& l : a.layers) {
    switch (l.kind) {
      case LayerKind::Gather: w[l.id] = l.indices.size(); break;
      case LayerKind::Dense: w[l.id] = static_cast<std::size_t>(std::max(l.width, 0)); break;
      case LayerKind::Softmax: w[l.id] = static_cast<std::size_t>(std::max(l.classes, 0)); break;
    }
  }
  return w;
}

inline std::size_t fan_in(const ArchitectureSpec& a, const Layer& l) {
  const auto w = layer_widths(a);
  std::size_t total = 0;
  for (const auto& in : l.inputs) {
    if (auto it = w.find(in); it != w.end()) total += it->second;
  }
  return total;
}

/// Trainable weights and biases of dense and softmax layers.
inline std::size_t parameter_count(const ArchitectureSpec& a) {
  std::size_t total = 0;
  for (const auto& l : a.layers) {
    if (l.kind == LayerKind::Dense) total += static_cast<std::size_t>(l.width) * (fan_in(a, l) + 1);
    if (l.kind == LayerKind::Softmax) total += static_cast<std::size_t>(l.classes) * (fan_in(a, l) + 1);
  }
  return total;
}

struct ValidationReport {
  std::vector<std::string> failures;
  bool ok() const noexcept { return failures.empty(); }
};

inline ValidationReport validate_architecture(const ArchitectureSpec& a) {
  ValidationReport r;
  auto fail = [&](std::string m) { r.failures.push_back(std::move(m)); };

  std::map<std::string, std::size_t> pos;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    if (a.layers[k].id.empty()) fail("layer " + std::to_string(k) + " has an empty id");
    if (!pos.emplace(a.layers[k].id, k).second) fail("duplicate layer id '" + a.layers[k].id + "'");
  }

  std::vector<int> seen(a.input_dim, 0);
  std::size_t softmax_count = 0;
  std::set<int> dense_widths;
  for (const auto& l : a.layers) {
    if (l.kind == LayerKind::Gather) {
      if (l.indices.empty()) fail("gather '" + l.id + "' selects nothing");
      if (!l.inputs.empty()) fail("gather '" + l.id + "' has layer inputs");
      for (std::size_t i : l.indices) {
        if (i >= a.input_dim) {
          fail("gather '" + l.id + "' index " + std::to_string(i) + " out of range");
        } else if (++seen[i] == 2) {
          fail("partition violation: index " + std::to_string(i) + " gathered more than once");
        }
      }
    } else {
      if (l.inputs.empty()) fail("layer '" + l.id + "' has no inputs");
      for (const auto& in : l.inputs) {
        if (!pos.count(in)) fail("layer '" + l.id + "' references unknown layer '" + in + "'");
      }
    }
    if (l.kind == LayerKind::Dense) {
      if (l.width <= 0) fail("dense '" + l.id + "' has non-positive width");
      dense_widths.insert(l.width);
    }
    if (l.kind == LayerKind::Softmax) {
      ++softmax_count;
      if (l.classes <= 0) fail("softmax '" + l.id + "' has non-positive class count");
    }
  }
  for (std::size_t i = 0; i < a.input_dim; ++i) {
    if (seen[i] == 0) fail("partition violation: index " + std::to_string(i) + " never gathered");
  }
  if (softmax_count != 1) fail("expected exactly one softmax layer, found " + std::to_string(softmax_count));
  if (dense_widths.size() > 1) fail("dense layers have unequal widths");

  // Layer references must be acyclic.
  const std::size_t n = a.layers.size();
  std::vector<std::vector<std::size_t>> consumers(n);
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& in : a.layers[k].inputs) {
      if (auto it = pos.find(in); it != pos.end()) {
        consumers[it->second].push_back(k);
        ++indegree[k];
      }
    }
  }
  std::vector<std::size_t> ready;
  for (std::size_t k = 0; k < n; ++k) {
    if (indegree[k] == 0) ready.push_back(k);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::size_t k = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t c : consumers[k]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (visited != n) {
    fail("layer references are not a DAG");
    return r;
  }

  if (softmax_count == 1) {
    std::vector<char> reaches(n, 0);
    std::vector<std::size_t> stack;
    for (std::size_t k = 0; k < n; ++k) {
      if (a.layers[k].kind == LayerKind::Softmax) {
        reaches[k] = 1;
        stack.push_back(k);
      }
    }
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      for (const auto& in : a.layers[k].inputs) {
        auto it = pos.find(in);
        if (it != pos.end() && !reaches[it->second]) {
          reaches[it->second] = 1;
          stack.push_back(it->second);
        }
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (a.layers[k].kind == LayerKind::Dense && !reaches[k]) {
        fail("softmax is not reachable from dense '" + a.layers[k].id + "'");
      }
    }
  }
  return r;
}

inline Json architecture_to_json(const ArchitectureSpec& a) {
  Json layers = Json::array();
  for (const auto& l : a.layers) {
    Json j;
    j["id"] = l.id;
    j["kind"] = to_string(l.kind);
    switch (l.kind) {
      case LayerKind::Gather: j["indices"] = l.indices; break;
      case LayerKind::Dense:
        j["width"] = l.width;
        j["activation"] = "relu";
        j["inputs"] = l.inputs;
        j["layer_order"] = l.layer_order;
        break;
      case LayerKind::Softmax:
        j["classes"] = l.classes;
        j["inputs"] = l.inputs;
        break;
    }
    layers.push_back(std::move(j));
  }
  return Json{{"input_dim", a.input_dim}, {"layers", std::move(layers)}};
}

inline ArchitectureSpec architecture_from_json(const Json& j) {
  try {
    ArchitectureSpec a;
    a.input_dim = j.at("input_dim").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
      Layer l;
      l.id = lj.at("id").get<std::string>();
      const auto kind = lj.at("kind").get<std::string>();
      if (kind == "gather") {
        l.kind = LayerKind::Gather;
        l.indices = lj.at("indices").get<std::vector<std::size_t>>();
      } else if (kind == "dense") {
        l.kind = LayerKind::Dense;
        l.width = lj.at("width").get<int>();
        if (lj.value("activation", "relu") != "relu") {
          throw Error(ErrorCode::InvalidArgument, "unsupported activation in layer '" + l.id + "'");
        }
        l.inputs = lj.at("inputs").get<std::vector<std::string>>();
        l.layer_order = lj.value("layer_order", 0);
      } else if (kind == "softmax") {
        l.kind = LayerKind::Softmax;
        l.classes = lj.at("classes").get<int>();
        l.inputs = lj.at("inputs").get<std::vector<std::string>>();
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown layer kind '" + kind + "'");
      }
      a.layers.push_back(std::move(l));
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed architecture JSON: ") + e.what());
  }
}

}  // namespace b2n
