#pragma once

#include <string>
#include <vector>

#include "b2n/graph_algorithms.hpp"
#include "b2n/graph_io.hpp"
#include "b2n/structure_learner.hpp"

namespace b2n {

/// Stochastic inverse: reversed generative edges plus bidirected edges
/// between latents that share a child.
struct InverseGraph {
  MixedGraph graph;
};

/// Class-conditional discriminative DAG; the class node is the last node.
struct DiscriminativeGraph {
  MixedGraph graph;
  NodeIndex class_node = 0;
};

inline constexpr std::string_view kClassNodeId = "Y";

inline InverseGraph build_stochastic_inverse(const LatentDAG& l) {
  const MixedGraph& g = l.graph;
  if (!g.is_dag()) throw Error(ErrorCode::GraphInvariant, "generative graph is not a DAG");
  InverseGraph inv{g.without_edges()};
  for (const Edge& e : g.edges()) inv.graph.add_directed(e.to, e.from);
  const NodeSet latents = l.latents();
  for (std::size_t p = 0; p < latents.size(); ++p) {
    const NodeSet ca = g.children(latents[p]);
    for (std::size_t q = p + 1; q < latents.size(); ++q) {
      const NodeIndex a = latents[p];
      const NodeIndex b = latents[q];
      // An adjacent pair already carries its dependence on the directed edge.
      if (inv.graph.adjacent(a, b)) continue;
      const NodeSet cb = g.children(b);
      NodeSet common;
      std::set_intersection(ca.begin(), ca.end(), cb.begin(), cb.end(), std::back_inserter(common));
      if (!common.empty()) inv.graph.add_bidirected(a, b);
    }
  }
  return inv;
}

inline DiscriminativeGraph build_discriminative(const InverseGraph& inv) {
  const MixedGraph& g = inv.graph;
  DiscriminativeGraph d{g.without_edges(), 0};
  for (const Edge& e : g.edges()) {
    if (e.kind == EdgeKind::Directed) d.graph.add_directed(e.from, e.to);
  }
  std::string id(kClassNodeId);
  while (d.graph.find(id)) id = "_" + id;
  d.class_node = d.graph.add_node(NodeRef::class_node(id));
  NodeSet parents;
  bool any_latent = false;
  for (NodeIndex v = 0; v < g.size(); ++v) {
    if (g.node(v).kind != NodeKind::Latent) continue;
    any_latent = true;
    if (g.children(v).empty()) parents.push_back(v);
  }
  if (!any_latent) {
    for (NodeIndex v = 0; v < g.size(); ++v) {
      if (g.node(v).kind == NodeKind::Observed) parents.push_back(v);
    }
  }
  for (NodeIndex p : parents) d.graph.add_directed(p, d.class_node);
  return d;
}

struct PreservationViolation {
  int prop;
  NodeIndex a;
  NodeIndex b;
  NodeSet s;
};

struct PreservationReport {
  std::size_t checked = 0;
  std::vector<PreservationViolation> violations;
  /// Failures on pairs of two observed nodes; not counted as violations.
  std::vector<PreservationViolation> informational;
};

struct PreservationOptions {
  std::size_t max_condition_size = 3;
  /// Condition the discriminative graph on the class node as well (the
  /// propositions' setting). Off only for negative controls.
  bool condition_on_class = true;
  /// Largest X ∪ H size accepted for exhaustive enumeration.
  std::size_t max_nodes = 14;
};

/// Exhaustively checks, for every pair {a, b} and condition set S over
/// X ∪ H with |S| <= max_condition_size, that each d-connection is preserved:
/// generative ⇒ projected inverse (1), projected inverse ⇒ discriminative
/// given S ∪ {Y} (2), generative ⇒ discriminative given S ∪ {Y} (3).
inline PreservationReport verify_preservation(const LatentDAG& l, const InverseGraph& inv, const DiscriminativeGraph& d,
                                              const PreservationOptions& opt = {}) {
  const std::size_t n = l.graph.size();
  if (n > opt.max_nodes) {
    throw Error(ErrorCode::TooLarge, "verification enumerates subsets of " + std::to_string(n) +
                                         " nodes; the limit is " + std::to_string(opt.max_nodes));
  }
  if (inv.graph.size() != n || d.graph.size() != n + 1 || d.class_node != n) {
    throw Error(ErrorCode::InvalidArgument, "generative, inverse and discriminative graphs disagree on nodes");
  }
  for (NodeIndex v = 0; v < n; ++v) {
    if (!(l.graph.node(v) == inv.graph.node(v)) || !(l.graph.node(v) == d.graph.node(v))) {
      throw Error(ErrorCode::InvalidArgument, "node '" + l.graph.node(v).id + "' differs between graphs");
    }
  }
  const DSeparation gen(l.graph);
  const DSeparation proj(materialize_projection(inv.graph));
  const DSeparation disc(d.graph);
  const NodeIndex y = d.class_node;

  PreservationReport report;
  NodeSet with_y;
  auto check = [&](NodeIndex a, NodeIndex b, const NodeSet& s) {
    ++report.checked;
    const bool observed_pair =
        l.graph.node(a).kind == NodeKind::Observed && l.graph.node(b).kind == NodeKind::Observed;
    auto& sink = observed_pair ? report.informational : report.violations;
    with_y = s;
    if (opt.condition_on_class) with_y.insert(std::upper_bound(with_y.begin(), with_y.end(), y), y);
    const bool in_gen = gen.connected_unchecked(a, b, s);
    const bool in_proj = proj.connected_unchecked(a, b, s);
    const bool in_disc = disc.connected_unchecked(a, b, with_y);
    if (in_gen && !in_proj) sink.push_back({1, a, b, s});
    if (in_proj && !in_disc) sink.push_back({2, a, b, s});
    if (in_gen && !in_disc) sink.push_back({3, a, b, s});
  };

  for (NodeIndex a = 0; a < n; ++a) {
    for (NodeIndex b = a + 1; b < n; ++b) {
      NodeSet rest;
      for (NodeIndex v = 0; v < n; ++v) {
        if (v != a && v != b) rest.push_back(v);
      }
      for (std::size_t k = 0; k <= std::min(opt.max_condition_size, rest.size()); ++k) {
        detail::any_subset(rest, k, [&](const NodeSet& s) {
          check(a, b, s);
          return false;
        });
      }
    }
  }
  return report;
}

inline Json preservation_report_to_json(const PreservationReport& r, const MixedGraph& g) {
  auto list = [&](const std::vector<PreservationViolation>& vs) {
    Json out = Json::array();
    for (const auto& v : vs) {
      out.push_back({{"prop", v.prop}, {"a", g.node(v.a).id}, {"b", g.node(v.b).id}, {"s", ids_json(g, v.s)}});
    }
    return out;
  };
  return Json{{"checked", r.checked}, {"violations", list(r.violations)}, {"observed_pairs", list(r.informational)}};
}

}  // namespace b2n
