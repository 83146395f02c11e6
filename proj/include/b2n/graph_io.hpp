#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "b2n/graph.hpp"
#include "json.hpp"

namespace b2n {

using Json = nlohmann::ordered_json;

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Observed: return "observed";
    case NodeKind::Latent: return "latent";
    case NodeKind::Class: return "class";
  }
  return "observed";
}

inline std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Directed: return "directed";
    case EdgeKind::Undirected: return "undirected";
    case EdgeKind::Bidirected: return "bidirected";
  }
  return "directed";
}

inline NodeKind parse_node_kind(const std::string& s) {
  if (s == "observed") return NodeKind::Observed;
  if (s == "latent") return NodeKind::Latent;
  if (s == "class") return NodeKind::Class;
  throw Error(ErrorCode::InvalidArgument, "unknown node kind '" + s + "'");
}

inline EdgeKind parse_edge_kind(const std::string& s) {
  if (s == "directed") return EdgeKind::Directed;
  if (s == "undirected") return EdgeKind::Undirected;
  if (s == "bidirected") return EdgeKind::Bidirected;
  throw Error(ErrorCode::InvalidArgument, "unknown edge kind '" + s + "'");
}

inline Json graph_to_json(const MixedGraph& g) {
  Json nodes = Json::array();
  for (const NodeRef& n : g.nodes()) {
    Json node = {{"id", n.id}, {"kind", to_string(n.kind)}};
    if (n.layer_order) node["layer"] = *n.layer_order;
    if (n.label) node["label"] = *n.label;
    nodes.push_back(std::move(node));
  }
  Json edges = Json::array();
  for (const Edge& e : g.edges()) {
    std::string from = g.node(e.from).id;
    std::string to = g.node(e.to).id;
    if (e.kind != EdgeKind::Directed && to < from) std::swap(from, to);
    edges.push_back({{"from", from}, {"to", to}, {"kind", to_string(e.kind)}});
  }
  return Json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

inline MixedGraph graph_from_json(const Json& j) {
  MixedGraph g;
  try {
    for (const auto& node : j.at("nodes")) {
      NodeRef ref;
      ref.id = node.at("id").get<std::string>();
      ref.kind = parse_node_kind(node.at("kind").get<std::string>());
      if (node.contains("layer")) ref.layer_order = node.at("layer").get<int>();
      if (node.contains("label")) ref.label = node.at("label").get<std::string>();
      g.add_node(std::move(ref));
    }
    for (const auto& edge : j.at("edges")) {
      const NodeIndex from = g.at(edge.at("from").get<std::string>());
      const NodeIndex to = g.at(edge.at("to").get<std::string>());
      g.add_edge({from, to, parse_edge_kind(edge.at("kind").get<std::string>())});
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed graph JSON: ") + e.what());
  }
  return g;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace b2n
