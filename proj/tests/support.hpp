#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "b2n/graph.hpp"

namespace b2n::testing {

inline MixedGraph dag_from(const std::vector<std::string>& ids, const std::vector<std::pair<std::string, std::string>>& edges) {
  MixedGraph g;
  for (const auto& id : ids) g.add_node(NodeRef::observed(id));
  for (const auto& [a, b] : edges) g.add_directed(g.at(a), g.at(b));
  return g;
}

inline MixedGraph undirected_from(const std::vector<std::string>& ids,
                                  const std::vector<std::pair<std::string, std::string>>& edges) {
  MixedGraph g;
  for (const auto& id : ids) g.add_node(NodeRef::observed(id));
  for (const auto& [a, b] : edges) g.add_undirected(g.at(a), g.at(b));
  return g;
}

/// d-separation by enumerating every simple path of the skeleton.
inline bool brute_force_d_separated(const MixedGraph& g, NodeIndex a, NodeIndex b, const NodeSet& s) {
  const std::size_t n = g.size();
  std::vector<std::vector<char>> desc(n, std::vector<char>(n, 0));  // desc[u][v]: v is u or a descendant of u
  for (NodeIndex u = 0; u < n; ++u) {
    std::vector<NodeIndex> stack{u};
    desc[u][u] = 1;
    while (!stack.empty()) {
      NodeIndex v = stack.back();
      stack.pop_back();
      for (NodeIndex c : g.children(v)) {
        if (!desc[u][c]) {
          desc[u][c] = 1;
          stack.push_back(c);
        }
      }
    }
  }
  auto in_s = [&](NodeIndex v) { return contains(s, v); };
  auto collider_open = [&](NodeIndex v) {
    for (NodeIndex w : s) {
      if (desc[v][w]) return true;
    }
    return false;
  };
  std::vector<NodeIndex> path{a};
  std::vector<char> on_path(n, 0);
  on_path[a] = 1;
  std::function<bool(NodeIndex)> active_from = [&](NodeIndex v) -> bool {
    if (v == b) {
      for (std::size_t k = 1; k + 1 < path.size(); ++k) {
        const NodeIndex prev = path[k - 1], mid = path[k], next = path[k + 1];
        const bool collider = g.has_directed(prev, mid) && g.has_directed(next, mid);
        if (collider ? !collider_open(mid) : in_s(mid)) return false;
      }
      return true;
    }
    for (NodeIndex w : g.adjacents(v)) {
      if (on_path[w]) continue;
      on_path[w] = 1;
      path.push_back(w);
      const bool found = active_from(w);
      path.pop_back();
      on_path[w] = 0;
      if (found) return true;
    }
    return false;
  };
  return !active_from(a);
}

/// Random DAG over n nodes with edge density p, in the index order.
inline MixedGraph random_dag(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  MixedGraph g;
  for (std::size_t v = 0; v < n; ++v) g.add_node(NodeRef::observed("V" + std::to_string(v)));
  for (NodeIndex a = 0; a < n; ++a) {
    for (NodeIndex b = a + 1; b < n; ++b) {
      if (coin(rng)) g.add_directed(a, b);
    }
  }
  return g;
}

}  // namespace b2n::testing
