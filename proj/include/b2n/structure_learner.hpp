#pragma once

#include <map>
#include <string>
#include <vector>

#include "b2n/graph_algorithms.hpp"
#include "b2n/indep_tests.hpp"
#include "b2n/trace.hpp"

namespace b2n {

/// Auxiliary CPDAG over the observed variables, with the order of
/// independencies encoded so far (-1 for the initial complete graph).
struct AuxGraph {
  MixedGraph graph;
  int resolution = -1;

  static AuxGraph complete(const std::vector<std::string>& names) {
    AuxGraph f;
    for (const auto& name : names) f.graph.add_node(NodeRef::observed(name));
    for (NodeIndex a = 0; a < names.size(); ++a) {
      for (NodeIndex b = a + 1; b < names.size(); ++b) f.graph.add_undirected(a, b);
    }
    return f;
  }
};

/// Deep generative structure over the observed variables (indices
/// 0..observed_count-1, shared with the auxiliary graph) and latents appended
/// after them.
struct LatentDAG {
  MixedGraph graph;
  std::vector<NodeSet> gather_groups;

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (const auto& node : graph.nodes()) n += node.kind == NodeKind::Observed ? 1 : 0;
    return n;
  }

  NodeSet latents() const {
    NodeSet out;
    for (NodeIndex v = 0; v < graph.size(); ++v) {
      if (graph.node(v).kind == NodeKind::Latent) out.push_back(v);
    }
    return out;
  }
};

/// Every structural invariant of a LatentDAG; empty when valid.
inline std::vector<std::string> latent_dag_violations(const LatentDAG& l) {
  std::vector<std::string> out;
  const MixedGraph& g = l.graph;
  if (!g.is_dag()) out.push_back("graph is not a DAG");
  std::optional<int> min_layer;
  NodeSet observed;
  for (NodeIndex v = 0; v < g.size(); ++v) {
    const NodeRef& node = g.node(v);
    if (node.kind == NodeKind::Class) out.push_back("class node '" + node.id + "' in generative graph");
    if (node.kind == NodeKind::Observed) {
      observed.push_back(v);
      if (!g.children(v).empty()) out.push_back("observed node '" + node.id + "' has children");
    }
    if (node.kind == NodeKind::Latent) {
      min_layer = min_layer ? std::min(*min_layer, *node.layer_order) : *node.layer_order;
      if (g.children(v).empty()) out.push_back("latent '" + node.id + "' has no children");
    }
  }
  for (const Edge& e : g.edges()) {
    const NodeRef& a = g.node(e.from);
    const NodeRef& b = g.node(e.to);
    if (a.kind == NodeKind::Latent && b.kind == NodeKind::Latent && !(*a.layer_order < *b.layer_order)) {
      out.push_back("latent edge " + a.id + "->" + b.id + " does not increase layer order");
    }
  }
  for (NodeIndex v = 0; v < g.size(); ++v) {
    const NodeRef& node = g.node(v);
    const bool parentless = g.parents(v).empty();
    const bool should =
        min_layer ? (node.kind == NodeKind::Latent && *node.layer_order == *min_layer) : node.kind == NodeKind::Observed;
    if (parentless != should) {
      out.push_back("node '" + node.id + (parentless ? "' is parentless but should not be" : "' should be parentless"));
    }
  }
  NodeSet gathered;
  std::size_t total = 0;
  for (const NodeSet& group : l.gather_groups) {
    if (group.empty()) out.push_back("empty gather group");
    total += group.size();
    gathered.insert(gathered.end(), group.begin(), group.end());
  }
  gathered = make_set(std::move(gathered));
  if (gathered != observed || total != observed.size()) {
    out.push_back("gather groups do not partition the observed nodes");
  }
  return out;
}

namespace detail {

inline NodeSet restrict_to(const NodeSet& s, const NodeSet& scope) {
  NodeSet out;
  std::set_intersection(s.begin(), s.end(), scope.begin(), scope.end(), std::back_inserter(out));
  return out;
}

/// Calls fn on each size-k subset of items in lexicographic order until fn
/// returns true. Returns whether it did.
template <typename Fn>
bool any_subset(const NodeSet& items, std::size_t k, Fn&& fn) {
  if (k > items.size()) return false;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  NodeSet subset(k);
  while (true) {
    for (std::size_t t = 0; t < k; ++t) subset[t] = items[idx[t]];
    if (fn(subset)) return true;
    std::size_t t = k;
    while (t > 0 && idx[t - 1] == items.size() - k + t - 1) --t;
    if (t == 0) return false;
    ++idx[t - 1];
    for (std::size_t u = t; u < k; ++u) idx[u] = idx[u - 1] + 1;
  }
}

}  // namespace detail

inline std::size_t max_potential_parents(const AuxGraph& f, const NodeSet& x, const NodeSet& x_ex) {
  const NodeSet scope = set_union(x, x_ex);
  std::size_t m = 0;
  for (NodeIndex v : x) m = std::max(m, detail::restrict_to(f.graph.potential_parents(v), scope).size());
  return m;
}

/// True when no node of x has enough potential parents (within x ∪ x_ex) to
/// form a condition set of size n.
inline bool exit_condition(const AuxGraph& f, const NodeSet& x, const NodeSet& x_ex, int n) {
  return max_potential_parents(f, x, x_ex) < static_cast<std::size_t>(n) + 1;
}

/// Removes edges whose endpoints are independent given some size-n subset of
/// an endpoint's potential parents (exogenous pairs first, then pairs inside
/// x), then re-derives the orientation inside x from the sepsets. Edges with
/// an endpoint outside x keep their marks.
inline AuxGraph increase_resolution(AuxGraph f, const NodeSet& x_in, const NodeSet& x_ex_in, int n,
                                    IndependenceSource& src, TraceLog* trace = nullptr) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "increase_resolution: negative order");
  const NodeSet x = make_set(x_in);
  const NodeSet x_ex = make_set(x_ex_in);
  const NodeSet scope = set_union(x, x_ex);
  const std::size_t order = static_cast<std::size_t>(n);
  MixedGraph& g = f.graph;

  auto remove_if_independent = [&](NodeIndex a, NodeIndex b, const NodeSet& candidates, const NodeSet& skip) {
    return detail::any_subset(candidates, order, [&](const NodeSet& s) {
      if (!skip.empty() && std::includes(skip.begin(), skip.end(), s.begin(), s.end())) return false;
      if (!src.is_independent(a, b, s)) return false;
      g.remove_edge(a, b);
      src.sepsets().record(a, b, s);
      if (trace) {
        trace->emit({{"event", "edge_removed"}, {"order", n}, {"x", g.node(a).id}, {"y", g.node(b).id},
                     {"sepset", ids_json(g, s)}});
      }
      return true;
    });
  };
  auto candidates = [&](NodeIndex v, NodeIndex other) {
    NodeSet c = detail::restrict_to(g.potential_parents(v), scope);
    c.erase(std::remove(c.begin(), c.end(), other), c.end());
    return c;
  };

  for (NodeIndex a : x) {
    for (NodeIndex b : x_ex) {
      if (g.adjacent(a, b)) remove_if_independent(a, b, candidates(a, b), {});
    }
  }
  for (std::size_t p = 0; p < x.size(); ++p) {
    for (std::size_t q = p + 1; q < x.size(); ++q) {
      const NodeIndex a = x[p];
      const NodeIndex b = x[q];
      if (!g.adjacent(a, b)) continue;
      const NodeSet first = candidates(a, b);
      if (remove_if_independent(a, b, first, {})) continue;
      remove_if_independent(a, b, candidates(b, a), first);
    }
  }

  MixedGraph base = g;
  for (const Edge& e : g.edges()) {
    if (e.kind == EdgeKind::Directed && contains(x, e.from) && contains(x, e.to)) {
      base.remove_edge(e.from, e.to);
      base.add_undirected(e.from, e.to);
    }
  }
  MixedGraph oriented = apply_orientation_rules(orient_v_structures(base, src.sepsets()));
  if (trace) {
    Json directed = Json::array();
    Json undirected = Json::array();
    for (const Edge& e : oriented.edges()) {
      const bool was_directed = g.has_directed(e.from, e.to);
      if (e.kind == EdgeKind::Directed && !was_directed) {
        directed.push_back({g.node(e.from).id, g.node(e.to).id});
      } else if (e.kind == EdgeKind::Undirected && !g.has_undirected(e.from, e.to)) {
        undirected.push_back({g.node(e.from).id, g.node(e.to).id});
      }
    }
    if (!directed.empty() || !undirected.empty()) {
      trace->emit({{"event", "orientation"}, {"order", n}, {"newly_directed", directed}, {"newly_undirected", undirected}});
    }
  }
  g = std::move(oriented);
  f.resolution = n;
  return f;
}

/// Descendant set (lowest topological order) and ancestor sets of x.
inline SinkSplit split_autonomous(const NodeSet& x, const AuxGraph& f) { return sink_components(f.graph, x); }

namespace detail {

class LatentBuilder {
 public:
  LatentBuilder(AuxGraph& f, IndependenceSource& src, TraceLog* trace) : f_(f), src_(src), trace_(trace) {
    for (const NodeRef& node : f.graph.nodes()) {
      if (node.kind != NodeKind::Observed) {
        throw Error(ErrorCode::GraphInvariant, "auxiliary graph must contain observed nodes only");
      }
    }
    if (src.variable_count() != f.graph.size()) {
      throw Error(ErrorCode::InvalidArgument, "independence source and auxiliary graph disagree on variable count");
    }
    out_.graph = f.graph.without_edges();
  }

  LatentDAG run(const NodeSet& x, const NodeSet& x_ex, int n) {
    if (x.empty()) throw Error(ErrorCode::InvalidArgument, "recur_lat_struct: empty variable set");
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "recur_lat_struct: negative order");
    if (!set_difference(x, set_difference(x, x_ex)).empty()) {
      throw Error(ErrorCode::InvalidArgument, "recur_lat_struct: x and x_ex overlap");
    }
    for (NodeIndex v : set_union(x, x_ex)) {
      if (v >= f_.graph.size()) throw Error(ErrorCode::UnknownNode, "recur_lat_struct: node out of range");
    }
    if (trace_) {
      src_.set_listener([this](const QueryEvent& e) { log_query(e); });
    }
    try {
      recurse(x, x_ex, n, true);
    } catch (...) {
      src_.set_listener(nullptr);
      throw;
    }
    src_.set_listener(nullptr);
    return std::move(out_);
  }

 private:
  NodeSet recurse(const NodeSet& x, const NodeSet& x_ex, int n, bool top) {
    const MixedGraph& g = f_.graph;
    const std::size_t pot = max_potential_parents(f_, x, x_ex);
    const bool exit = pot < static_cast<std::size_t>(n) + 1;
    if (trace_) {
      trace_->emit({{"event", "recursion"}, {"order", n}, {"x", ids_json(g, x)}, {"x_ex", ids_json(g, x_ex)},
                    {"max_potential_parents", pot}, {"exit", exit}});
    }
    if (exit) {
      out_.gather_groups.push_back(x);
      if (trace_) trace_->emit({{"event", "gather"}, {"order", n}, {"group", ids_json(g, x)}});
      return x;
    }
    current_exogenous_ = x_ex;
    f_ = increase_resolution(std::move(f_), x, x_ex, n, src_, trace_);
    const SinkSplit split = split_autonomous(x, f_);
    if (trace_) {
      Json ancestors = Json::array();
      for (const auto& a : split.ancestors) ancestors.push_back(ids_json(g, a));
      trace_->emit({{"event", "split"}, {"order", n}, {"descendants", ids_json(g, split.descendants)},
                    {"ancestors", ancestors}});
    }

    std::vector<NodeSet> ancestor_roots;
    NodeSet descendant_ex = x_ex;
    for (const NodeSet& a : split.ancestors) {
      ancestor_roots.push_back(recurse(a, x_ex, n + 1, false));
      descendant_ex = set_union(descendant_ex, a);
    }
    const NodeSet descendant_roots = recurse(split.descendants, descendant_ex, n + 1, false);

    if (split.ancestors.empty()) {
      if (!top) {
        if (trace_) {
          trace_->emit({{"event", "pass_through"}, {"order", n}, {"roots", ids_json(out_.graph, descendant_roots)}});
        }
        return descendant_roots;
      }
      return {add_latent(n, descendant_roots)};
    }
    NodeSet created;
    for (const NodeSet& roots : ancestor_roots) created.push_back(add_latent(n, set_union(roots, descendant_roots)));
    return created;
  }

  NodeIndex add_latent(int n, const NodeSet& children) {
    int& counter = latent_counters_[n];
    std::string id;
    do {
      id = "H" + std::to_string(n) + "_" + std::to_string(++counter);
    } while (out_.graph.find(id));
    const NodeIndex h = out_.graph.add_node(NodeRef::latent(id, n));
    for (NodeIndex c : children) out_.graph.add_directed(h, c);
    if (trace_) {
      trace_->emit({{"event", "latent_created"}, {"id", id}, {"layer", n}, {"children", ids_json(out_.graph, children)}});
    }
    return h;
  }

  void log_query(const QueryEvent& e) {
    // f_ is moved into increase_resolution while tests run; observed ids are
    // shared with the output graph.
    const MixedGraph& g = out_.graph;
    bool exogenous_in_s = false;
    for (NodeIndex v : e.s) exogenous_in_s = exogenous_in_s || contains(current_exogenous_, v);
    Json j = {{"event", "ci_test"}, {"order", e.s.size()}, {"x", g.node(e.i).id}, {"y", g.node(e.j).id},
              {"s", ids_json(g, e.s)}};
    if (e.result) {
      j["statistic"] = e.result->statistic;
      j["dof"] = e.result->dof;
      j["p"] = e.result->p_value;
      if (e.result->insufficient_data) j["insufficient_data"] = true;
    }
    j["independent"] = e.independent;
    if (e.cached) j["cached"] = true;
    if (exogenous_in_s) j["exogenous_in_s"] = true;
    trace_->emit(std::move(j));
  }

  AuxGraph& f_;
  IndependenceSource& src_;
  TraceLog* trace_;
  LatentDAG out_;
  std::map<int, int> latent_counters_;
  NodeSet current_exogenous_;
};

}  // namespace detail

/// Recursive construction of the latent structure over x. The auxiliary
/// graph is refined in place; the returned structure contains every node of
/// f (as observed nodes) plus the created latents, with gather groups for x.
inline LatentDAG recur_lat_struct(AuxGraph& f, const NodeSet& x, const NodeSet& x_ex, int n, IndependenceSource& src,
                                  TraceLog* trace = nullptr) {
  return detail::LatentBuilder(f, src, trace).run(make_set(x), make_set(x_ex), n);
}

struct LearnResult {
  LatentDAG latent;
  AuxGraph aux;
};

/// Full run from the complete graph over every variable of src, n = 0.
inline LearnResult learn_structure(IndependenceSource& src, const std::vector<std::string>& names,
                                   TraceLog* trace = nullptr) {
  if (names.size() != src.variable_count()) {
    throw Error(ErrorCode::InvalidArgument, "variable names do not match the independence source");
  }
  if (names.empty()) throw Error(ErrorCode::InvalidArgument, "no variables to learn from");
  LearnResult r;
  r.aux = AuxGraph::complete(names);
  NodeSet all(names.size());
  std::iota(all.begin(), all.end(), NodeIndex{0});
  r.latent = recur_lat_struct(r.aux, all, {}, 0, src, trace);
  if (trace) {
    for (const auto& [order, stats] : src.order_stats()) {
      trace->emit({{"event", "order_stats"}, {"order", order}, {"tests", stats.tests},
                   {"independent", stats.independent},
                   {"independence_rate", stats.tests ? static_cast<double>(stats.independent) / stats.tests : 0.0}});
    }
  }
  return r;
}

}  // namespace b2n
