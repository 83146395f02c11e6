#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "b2n/error.hpp"

namespace b2n {

using NodeIndex = std::size_t;

/// Sorted, duplicate-free list of node indices.
using NodeSet = std::vector<NodeIndex>;

inline NodeSet make_set(std::vector<NodeIndex> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline bool contains(const NodeSet& s, NodeIndex v) {
  return std::binary_search(s.begin(), s.end(), v);
}

inline NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline NodeSet set_difference(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

enum class NodeKind { Observed, Latent, Class };

struct NodeRef {
  std::string id;
  NodeKind kind = NodeKind::Observed;
  /// Present iff kind == Latent.
  std::optional<int> layer_order;
  std::optional<std::string> label;

  static NodeRef observed(std::string id) { return {std::move(id), NodeKind::Observed, std::nullopt, std::nullopt}; }
  static NodeRef latent(std::string id, int layer) { return {std::move(id), NodeKind::Latent, layer, std::nullopt}; }
  static NodeRef class_node(std::string id) { return {std::move(id), NodeKind::Class, std::nullopt, std::nullopt}; }

  bool operator==(const NodeRef&) const = default;
};

enum class EdgeKind { Directed, Undirected, Bidirected };

struct Edge {
  NodeIndex from;
  NodeIndex to;
  EdgeKind kind;
  bool operator==(const Edge&) const = default;
};

/// Graph over nodes with directed, undirected and bidirected edges; at most
/// one edge per node pair and no self-loops. Node order (index) is the
/// tie-breaking order used by every algorithm in the library.
class MixedGraph {
 public:
  MixedGraph() = default;

  NodeIndex add_node(NodeRef node) {
    if (index_.count(node.id) != 0) {
      throw Error(ErrorCode::GraphInvariant, "duplicate node id '" + node.id + "'");
    }
    if ((node.kind == NodeKind::Latent) != node.layer_order.has_value()) {
      throw Error(ErrorCode::GraphInvariant, "layer_order must be present iff node '" + node.id + "' is latent");
    }
    const NodeIndex id = nodes_.size();
    index_.emplace(node.id, id);
    nodes_.push_back(std::move(node));
    const std::size_t n = nodes_.size();
    std::vector<Mark> grown(n * n, Mark::None);
    for (std::size_t u = 0; u + 1 < n; ++u) {
      for (std::size_t v = 0; v + 1 < n; ++v) grown[u * n + v] = marks_[u * (n - 1) + v];
    }
    marks_ = std::move(grown);
    return id;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const NodeRef& node(NodeIndex v) const { return nodes_.at(v); }
  const std::vector<NodeRef>& nodes() const noexcept { return nodes_; }

  std::optional<NodeIndex> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NodeIndex at(std::string_view id) const {
    auto v = find(id);
    if (!v) throw Error(ErrorCode::UnknownNode, "unknown node '" + std::string(id) + "'");
    return *v;
  }

  void add_directed(NodeIndex from, NodeIndex to) { set_pair(from, to, Mark::Out, Mark::In); }
  void add_undirected(NodeIndex a, NodeIndex b) { set_pair(a, b, Mark::Undirected, Mark::Undirected); }
  void add_bidirected(NodeIndex a, NodeIndex b) { set_pair(a, b, Mark::Bidirected, Mark::Bidirected); }
  void add_edge(const Edge& e) {
    switch (e.kind) {
      case EdgeKind::Directed: add_directed(e.from, e.to); break;
      case EdgeKind::Undirected: add_undirected(e.from, e.to); break;
      case EdgeKind::Bidirected: add_bidirected(e.from, e.to); break;
    }
  }

  /// Replaces an undirected edge a−b with a→b.
  void orient(NodeIndex a, NodeIndex b) {
    if (!has_undirected(a, b)) {
      throw Error(ErrorCode::GraphInvariant, "orient: no undirected edge " + pair_name(a, b));
    }
    mark(a, b) = Mark::Out;
    mark(b, a) = Mark::In;
  }

  void remove_edge(NodeIndex a, NodeIndex b) {
    check(a);
    check(b);
    mark(a, b) = Mark::None;
    mark(b, a) = Mark::None;
  }

  bool adjacent(NodeIndex a, NodeIndex b) const { return mark(a, b) != Mark::None; }
  bool has_directed(NodeIndex from, NodeIndex to) const { return mark(from, to) == Mark::Out; }
  bool has_undirected(NodeIndex a, NodeIndex b) const { return mark(a, b) == Mark::Undirected; }
  bool has_bidirected(NodeIndex a, NodeIndex b) const { return mark(a, b) == Mark::Bidirected; }

  NodeSet parents(NodeIndex v) const { return collect(v, Mark::In); }
  NodeSet children(NodeIndex v) const { return collect(v, Mark::Out); }
  NodeSet neighbors(NodeIndex v) const { return collect(v, Mark::Undirected); }
  NodeSet spouses(NodeIndex v) const { return collect(v, Mark::Bidirected); }
  NodeSet adjacents(NodeIndex v) const {
    check(v);
    NodeSet out;
    for (NodeIndex u = 0; u < size(); ++u) {
      if (mark(v, u) != Mark::None) out.push_back(u);
    }
    return out;
  }

  /// Directed parents plus undirected neighbours.
  NodeSet potential_parents(NodeIndex v) const {
    check(v);
    NodeSet out;
    for (NodeIndex u = 0; u < size(); ++u) {
      const Mark m = mark(v, u);
      if (m == Mark::In || m == Mark::Undirected) out.push_back(u);
    }
    return out;
  }

  /// All edges; directed as (from, to), others with from < to. Ordered by
  /// (min endpoint, max endpoint).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (NodeIndex u = 0; u < size(); ++u) {
      for (NodeIndex v = u + 1; v < size(); ++v) {
        switch (mark(u, v)) {
          case Mark::None: break;
          case Mark::Out: out.push_back({u, v, EdgeKind::Directed}); break;
          case Mark::In: out.push_back({v, u, EdgeKind::Directed}); break;
          case Mark::Undirected: out.push_back({u, v, EdgeKind::Undirected}); break;
          case Mark::Bidirected: out.push_back({u, v, EdgeKind::Bidirected}); break;
        }
      }
    }
    return out;
  }

  std::size_t edge_count(EdgeKind kind) const {
    std::size_t n = 0;
    for (const auto& e : edges()) n += e.kind == kind ? 1 : 0;
    return n;
  }
  std::size_t edge_count() const { return edges().size(); }

  /// Same nodes, every edge replaced by an undirected one.
  MixedGraph skeleton() const {
    MixedGraph g = without_edges();
    for (const auto& e : edges()) g.add_undirected(e.from, e.to);
    return g;
  }

  MixedGraph without_edges() const {
    MixedGraph g = *this;
    std::fill(g.marks_.begin(), g.marks_.end(), Mark::None);
    return g;
  }

  /// True iff the directed part has no cycle.
  bool directed_acyclic() const { return topological_order().has_value(); }

  /// Kahn's algorithm over directed edges, smallest ready index first.
  std::optional<std::vector<NodeIndex>> topological_order() const {
    const std::size_t n = size();
    std::vector<std::size_t> indegree(n, 0);
    for (NodeIndex u = 0; u < n; ++u) {
      for (NodeIndex v = 0; v < n; ++v) indegree[v] += has_directed(u, v) ? 1 : 0;
    }
    std::vector<NodeIndex> order;
    std::vector<bool> done(n, false);
    while (order.size() < n) {
      bool progressed = false;
      for (NodeIndex v = 0; v < n; ++v) {
        if (done[v] || indegree[v] != 0) continue;
        done[v] = true;
        order.push_back(v);
        for (NodeIndex w = 0; w < n; ++w) {
          if (has_directed(v, w)) --indegree[w];
        }
        progressed = true;
        break;
      }
      if (!progressed) return std::nullopt;
    }
    return order;
  }

  bool is_dag() const {
    for (const auto& e : edges()) {
      if (e.kind != EdgeKind::Directed) return false;
    }
    return directed_acyclic();
  }

  std::string pair_name(NodeIndex a, NodeIndex b) const {
    return "(" + name(a) + ", " + name(b) + ")";
  }

  bool operator==(const MixedGraph& other) const {
    return nodes_ == other.nodes_ && marks_ == other.marks_;
  }

 private:
  enum class Mark : std::uint8_t { None, Out, In, Undirected, Bidirected };

  std::string name(NodeIndex v) const { return v < size() ? nodes_[v].id : "#" + std::to_string(v); }

  void check(NodeIndex v) const {
    if (v >= size()) throw Error(ErrorCode::UnknownNode, "node index " + std::to_string(v) + " out of range");
  }

  Mark& mark(NodeIndex a, NodeIndex b) { return marks_[a * size() + b]; }
  Mark mark(NodeIndex a, NodeIndex b) const {
    check(a);
    check(b);
    return marks_[a * size() + b];
  }

  void set_pair(NodeIndex a, NodeIndex b, Mark ab, Mark ba) {
    check(a);
    check(b);
    if (a == b) throw Error(ErrorCode::GraphInvariant, "self-loop on '" + name(a) + "'");
    if (mark(a, b) != Mark::None) {
      throw Error(ErrorCode::GraphInvariant, "duplicate edge " + pair_name(a, b));
    }
    mark(a, b) = ab;
    mark(b, a) = ba;
  }

  NodeSet collect(NodeIndex v, Mark m) const {
    check(v);
    NodeSet out;
    for (NodeIndex u = 0; u < size(); ++u) {
      if (mark(v, u) == m) out.push_back(u);
    }
    return out;
  }

  std::vector<NodeRef> nodes_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<Mark> marks_;
};

/// Undirected pair key with min first.
inline std::pair<NodeIndex, NodeIndex> ordered_pair(NodeIndex a, NodeIndex b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

}  // namespace b2n
