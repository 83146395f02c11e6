#pragma once

#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "b2n/graph.hpp"

namespace b2n {

/// Separating sets recorded when an edge is removed, keyed by unordered pair.
class SepsetRegistry {
 public:
  void record(NodeIndex a, NodeIndex b, NodeSet s) { sets_[ordered_pair(a, b)] = std::move(s); }

  const NodeSet* find(NodeIndex a, NodeIndex b) const {
    auto it = sets_.find(ordered_pair(a, b));
    return it == sets_.end() ? nullptr : &it->second;
  }

  bool contains(NodeIndex a, NodeIndex b) const { return find(a, b) != nullptr; }
  std::size_t size() const noexcept { return sets_.size(); }
  const std::map<std::pair<NodeIndex, NodeIndex>, NodeSet>& entries() const noexcept { return sets_; }

 private:
  std::map<std::pair<NodeIndex, NodeIndex>, NodeSet> sets_;
};

/// Precomputed parent/child lists of a DAG for repeated d-separation queries
/// (reachability over active trails). Holds scratch buffers, so one instance
/// must not be queried from several threads at once.
class DSeparation {
 public:
  explicit DSeparation(const MixedGraph& dag) : n_(dag.size()), parents_(n_), children_(n_) {
    if (!dag.is_dag()) {
      throw Error(ErrorCode::GraphInvariant, "d-separation requires a DAG (directed edges only, acyclic)");
    }
    for (const auto& e : dag.edges()) {
      children_[e.from].push_back(e.to);
      parents_[e.to].push_back(e.from);
    }
    in_s_.assign(n_, 0);
    anc_.assign(n_, 0);
    visited_.assign(2 * n_, 0);
  }

  std::size_t size() const noexcept { return n_; }

  bool separated(NodeIndex a, NodeIndex b, const NodeSet& s) const {
    if (a >= n_ || b >= n_) throw Error(ErrorCode::UnknownNode, "d-separation query on unknown node");
    if (a == b) throw Error(ErrorCode::InvalidArgument, "d-separation query needs two distinct nodes");
    for (NodeIndex v : s) {
      if (v >= n_) throw Error(ErrorCode::UnknownNode, "conditioning set contains unknown node");
      if (v == a || v == b) throw Error(ErrorCode::InvalidArgument, "query endpoint inside conditioning set");
    }
    return !connected_unchecked(a, b, s);
  }

  /// No argument validation; for hot loops that already guarantee the
  /// preconditions.
  bool connected_unchecked(NodeIndex a, NodeIndex b, const NodeSet& s) const {
    std::fill(in_s_.begin(), in_s_.end(), 0);
    std::fill(anc_.begin(), anc_.end(), 0);
    std::fill(visited_.begin(), visited_.end(), 0);
    stack_.clear();
    for (NodeIndex v : s) {
      in_s_[v] = 1;
      stack_.push_back(v);
    }
    while (!stack_.empty()) {
      const NodeIndex v = stack_.back();
      stack_.pop_back();
      if (anc_[v]) continue;
      anc_[v] = 1;
      for (NodeIndex p : parents_[v]) stack_.push_back(p);
    }
    queue_.clear();
    queue_.push_back({a, true});
    while (!queue_.empty()) {
      const Visit it = queue_.back();
      queue_.pop_back();
      const std::size_t key = 2 * it.node + (it.from_child ? 1 : 0);
      if (visited_[key]) continue;
      visited_[key] = 1;
      if (it.node == b && !in_s_[it.node]) return true;
      if (it.from_child) {
        if (in_s_[it.node]) continue;
        for (NodeIndex p : parents_[it.node]) queue_.push_back({p, true});
        for (NodeIndex c : children_[it.node]) queue_.push_back({c, false});
      } else {
        if (!in_s_[it.node]) {
          for (NodeIndex c : children_[it.node]) queue_.push_back({c, false});
        }
        if (anc_[it.node]) {
          for (NodeIndex p : parents_[it.node]) queue_.push_back({p, true});
        }
      }
    }
    return false;
  }

 private:
  struct Visit {
    NodeIndex node;
    bool from_child;
  };

  std::size_t n_;
  std::vector<std::vector<NodeIndex>> parents_;
  std::vector<std::vector<NodeIndex>> children_;
  mutable std::vector<char> in_s_;
  mutable std::vector<char> anc_;
  mutable std::vector<char> visited_;
  mutable std::vector<NodeIndex> stack_;
  mutable std::vector<Visit> queue_;
};

/// True iff every path between a and b in the DAG g is blocked by s.
inline bool d_separated(const MixedGraph& g, NodeIndex a, NodeIndex b, const NodeSet& s) {
  return DSeparation(g).separated(a, b, make_set(s));
}

/// Orients X→Z←Y for every unshielded triple X−Z−Y whose middle node is not
/// in the separating set of (X, Y). Only undirected edges are oriented; an
/// edge already pointing the other way is left as is.
inline MixedGraph orient_v_structures(const MixedGraph& f, const SepsetRegistry& sepsets) {
  if (f.edge_count(EdgeKind::Bidirected) != 0) {
    throw Error(ErrorCode::GraphInvariant, "orient_v_structures: bidirected edges present");
  }
  MixedGraph out = f;
  const std::size_t n = f.size();
  for (NodeIndex x = 0; x < n; ++x) {
    const NodeSet adj_x = f.adjacents(x);
    for (NodeIndex y = x + 1; y < n; ++y) {
      if (f.adjacent(x, y)) continue;
      const NodeSet adj_y = f.adjacents(y);
      NodeSet common;
      std::set_intersection(adj_x.begin(), adj_x.end(), adj_y.begin(), adj_y.end(), std::back_inserter(common));
      if (common.empty()) continue;
      const NodeSet* sep = sepsets.find(x, y);
      if (sep == nullptr) {
        throw Error(ErrorCode::MissingSepset, "no separating set recorded for non-adjacent pair " + f.pair_name(x, y));
      }
      for (NodeIndex z : common) {
        if (contains(*sep, z)) continue;
        if (out.has_undirected(x, z)) out.orient(x, z);
        if (out.has_undirected(y, z)) out.orient(y, z);
      }
    }
  }
  return out;
}

namespace detail {

// Meek rules for orienting a−b as a→b.
inline bool meek_applies(const MixedGraph& g, NodeIndex a, NodeIndex b) {
  const std::size_t n = g.size();
  for (NodeIndex c = 0; c < n; ++c) {
    if (c == a || c == b) continue;
    // R1: c→a−b, c and b non-adjacent.
    if (g.has_directed(c, a) && !g.adjacent(c, b)) return true;
    // R2: a→c→b.
    if (g.has_directed(a, c) && g.has_directed(c, b)) return true;
  }
  for (NodeIndex c = 0; c < n; ++c) {
    if (c == a || c == b || !g.has_undirected(a, c)) continue;
    for (NodeIndex d = c + 1; d < n; ++d) {
      if (d == a || d == b || !g.has_undirected(a, d)) continue;
      // R3: a−c→b, a−d→b, c and d non-adjacent.
      if (g.has_directed(c, b) && g.has_directed(d, b) && !g.adjacent(c, d)) return true;
    }
  }
  for (NodeIndex k = 0; k < n; ++k) {
    if (k == a || k == b || !g.has_undirected(a, k) || g.adjacent(k, b)) continue;
    for (NodeIndex l = 0; l < n; ++l) {
      if (l == a || l == b || l == k) continue;
      // R4: a−k→l→b, a adjacent to l, k and b non-adjacent.
      if (g.has_directed(k, l) && g.has_directed(l, b) && g.adjacent(a, l)) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Fixpoint of the four Meek orientation rules. Edges are scanned in
/// ascending (min, max) order, lower endpoint as tail first.
inline MixedGraph apply_orientation_rules(const MixedGraph& f) {
  MixedGraph g = f;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Edge& e : g.edges()) {
      if (e.kind != EdgeKind::Undirected || !g.has_undirected(e.from, e.to)) continue;
      if (detail::meek_applies(g, e.from, e.to)) {
        g.orient(e.from, e.to);
        changed = true;
      } else if (detail::meek_applies(g, e.to, e.from)) {
        g.orient(e.to, e.from);
        changed = true;
      }
    }
  }
  return g;
}

struct SinkSplit {
  NodeSet descendants;
  std::vector<NodeSet> ancestors;
};

namespace detail {

inline std::vector<NodeSet> components(const MixedGraph& f, const NodeSet& scope, bool undirected_only) {
  std::vector<NodeIndex> parent(f.size());
  std::iota(parent.begin(), parent.end(), NodeIndex{0});
  auto root = [&](NodeIndex v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t i = 0; i < scope.size(); ++i) {
    for (std::size_t j = i + 1; j < scope.size(); ++j) {
      const NodeIndex u = scope[i];
      const NodeIndex v = scope[j];
      const bool linked = undirected_only ? f.has_undirected(u, v) : f.adjacent(u, v);
      if (!linked) continue;
      const NodeIndex ru = root(u);
      const NodeIndex rv = root(v);
      if (ru != rv) parent[std::max(ru, rv)] = std::min(ru, rv);
    }
  }
  std::map<NodeIndex, NodeSet> groups;
  for (NodeIndex v : scope) groups[root(v)].push_back(v);
  std::vector<NodeSet> out;
  for (auto& [r, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(), [](const NodeSet& a, const NodeSet& b) { return a.front() < b.front(); });
  return out;
}

}  // namespace detail

/// Splits scope into the lowest-topological-order group (union of the sink
/// strongly-connected groups of the chain-component DAG) and the connected
/// pieces that remain once that group is removed.
inline SinkSplit sink_components(const MixedGraph& f, const NodeSet& scope_in) {
  const NodeSet scope = make_set(scope_in);
  if (scope.empty()) throw Error(ErrorCode::InvalidArgument, "sink_components: empty scope");
  for (NodeIndex v : scope) {
    if (v >= f.size()) throw Error(ErrorCode::UnknownNode, "sink_components: scope node out of range");
  }
  const std::vector<NodeSet> chains = detail::components(f, scope, true);
  const std::size_t c = chains.size();
  std::vector<std::size_t> comp_of(f.size(), c);
  for (std::size_t i = 0; i < c; ++i) {
    for (NodeIndex v : chains[i]) comp_of[v] = i;
  }
  std::vector<std::vector<char>> reach(c, std::vector<char>(c, 0));
  for (NodeIndex u : scope) {
    for (NodeIndex v : scope) {
      if (f.has_directed(u, v) && comp_of[u] != comp_of[v]) reach[comp_of[u]][comp_of[v]] = 1;
    }
  }
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < c; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < c; ++j) {
        if (reach[k][j]) reach[i][j] = 1;
      }
    }
  }
  SinkSplit out;
  for (std::size_t i = 0; i < c; ++i) {
    bool sink = true;
    for (std::size_t j = 0; j < c && sink; ++j) {
      if (j != i && reach[i][j] && !reach[j][i]) sink = false;
    }
    if (sink) out.descendants.insert(out.descendants.end(), chains[i].begin(), chains[i].end());
  }
  out.descendants = make_set(std::move(out.descendants));
  const NodeSet rest = set_difference(scope, out.descendants);
  if (!rest.empty()) out.ancestors = detail::components(f, rest, false);
  return out;
}

/// Replaces each bidirected pair (H, H') by a fresh latent Q with Q→H and
/// Q→H'. Fresh nodes are appended after the original ones, in edge order.
inline MixedGraph materialize_projection(const MixedGraph& g) {
  if (g.edge_count(EdgeKind::Undirected) != 0) {
    throw Error(ErrorCode::GraphInvariant, "materialize_projection: undirected edges present");
  }
  MixedGraph out = g.without_edges();
  std::vector<Edge> bidirected;
  for (const Edge& e : g.edges()) {
    if (e.kind == EdgeKind::Directed) {
      out.add_directed(e.from, e.to);
    } else {
      bidirected.push_back(e);
    }
  }
  std::size_t counter = 0;
  for (const Edge& e : bidirected) {
    std::string id;
    do {
      id = "__q" + std::to_string(counter++);
    } while (out.find(id));
    const auto& a = g.node(e.from);
    const auto& b = g.node(e.to);
    int layer = 0;
    if (a.layer_order) layer = *a.layer_order;
    if (b.layer_order) layer = std::min(layer, *b.layer_order);
    const NodeIndex q = out.add_node(NodeRef::latent(id, layer));
    out.add_directed(q, e.from);
    out.add_directed(q, e.to);
  }
  if (!out.directed_acyclic()) {
    throw Error(ErrorCode::GraphInvariant, "materialize_projection: result has a directed cycle");
  }
  return out;
}

}  // namespace b2n
