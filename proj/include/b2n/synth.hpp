#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "b2n/dataset.hpp"
#include "b2n/graph_algorithms.hpp"
#include "b2n/graph_io.hpp"
#include "b2n/structure_learner.hpp"

namespace b2n {

/// Discrete Bayesian network. cpts[v] is row-major over parent
/// configurations (parents in ascending index order, last parent varying
/// fastest), one row of cardinalities[v] probabilities per configuration.
struct DiscreteBN {
  MixedGraph dag;
  std::vector<int> cardinalities;
  std::vector<std::vector<double>> cpts;

  std::size_t parent_configs(NodeIndex v) const {
    std::size_t c = 1;
    for (NodeIndex p : dag.parents(v)) c *= static_cast<std::size_t>(cardinalities[p]);
    return c;
  }
};

inline constexpr double kMinCptEntry = 0.05;

/// Empty when the network is well formed.
inline std::vector<std::string> bn_violations(const DiscreteBN& bn) {
  std::vector<std::string> out;
  if (!bn.dag.is_dag()) out.push_back("graph is not a DAG");
  if (bn.cardinalities.size() != bn.dag.size() || bn.cpts.size() != bn.dag.size()) {
    out.push_back("cardinality/CPT count differs from node count");
    return out;
  }
  for (NodeIndex v = 0; v < bn.dag.size(); ++v) {
    const std::size_t k = static_cast<std::size_t>(bn.cardinalities[v]);
    if (k == 0) out.push_back("non-positive cardinality");
    if (bn.cpts[v].size() != bn.parent_configs(v) * k) {
      out.push_back("CPT of '" + bn.dag.node(v).id + "' has the wrong shape");
      continue;
    }
    for (std::size_t row = 0; row < bn.parent_configs(v); ++row) {
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double p = bn.cpts[v][row * k + c];
        if (p < 0.0) out.push_back("negative probability in '" + bn.dag.node(v).id + "'");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) out.push_back("CPT row of '" + bn.dag.node(v).id + "' does not sum to 1");
    }
  }
  return out;
}

/// Random DAG over a uniformly random node ordering, each node taking up to
/// max_parents parents among its predecessors; CPT rows are Dirichlet(1)
/// draws shrunk towards uniform so every entry is at least kMinCptEntry.
inline DiscreteBN random_bn(std::size_t n_nodes, std::size_t max_parents, int cardinality, std::uint64_t seed) {
  if (n_nodes == 0) throw Error(ErrorCode::InvalidArgument, "random_bn needs at least one node");
  if (max_parents >= n_nodes) throw Error(ErrorCode::InvalidArgument, "random_bn needs max_parents < n_nodes");
  if (cardinality < 2 || cardinality * kMinCptEntry > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "random_bn cardinality must be in [2, 20]");
  }
  std::mt19937_64 rng(seed);
  DiscreteBN bn;
  for (std::size_t v = 0; v < n_nodes; ++v) bn.dag.add_node(NodeRef::observed("X" + std::to_string(v)));
  std::vector<NodeIndex> order(n_nodes);
  std::iota(order.begin(), order.end(), NodeIndex{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t pos = 1; pos < n_nodes; ++pos) {
    const std::size_t limit = std::min(max_parents, pos);
    const std::size_t count = std::uniform_int_distribution<std::size_t>(0, limit)(rng);
    std::vector<NodeIndex> pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pos));
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t p = 0; p < count; ++p) bn.dag.add_directed(pool[p], order[pos]);
  }
  bn.cardinalities.assign(n_nodes, cardinality);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  const double spread = 1.0 - kMinCptEntry * cardinality;
  for (NodeIndex v = 0; v < n_nodes; ++v) {
    const std::size_t rows = bn.parent_configs(v);
    std::vector<double> cpt(rows * static_cast<std::size_t>(cardinality));
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (int c = 0; c < cardinality; ++c) total += cpt[r * cardinality + c] = gamma(rng);
      double sum = 0.0;
      for (int c = 0; c + 1 < cardinality; ++c) {
        double& p = cpt[r * cardinality + c];
        p = kMinCptEntry + spread * p / total;
        sum += p;
      }
      cpt[r * cardinality + cardinality - 1] = 1.0 - sum;
    }
    bn.cpts.push_back(std::move(cpt));
  }
  return bn;
}

/// Samples rows in topological order; column names are the node ids.
inline Dataset ancestral_sample(const DiscreteBN& bn, std::size_t rows, std::uint64_t seed) {
  const auto problems = bn_violations(bn);
  if (!problems.empty()) throw Error(ErrorCode::InvalidArgument, "invalid network: " + problems.front());
  const std::size_t n = bn.dag.size();
  const auto order = *bn.dag.topological_order();
  std::vector<NodeSet> parents(n);
  for (NodeIndex v = 0; v < n; ++v) parents[v] = bn.dag.parents(v);
  std::vector<Column> columns(n);
  for (NodeIndex v = 0; v < n; ++v) {
    columns[v].name = bn.dag.node(v).id;
    columns[v].schema = ColumnSchema::categorical(bn.cardinalities[v]);
    columns[v].categories.resize(rows);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (NodeIndex v : order) {
      std::size_t config = 0;
      for (NodeIndex p : parents[v]) {
        config = config * static_cast<std::size_t>(bn.cardinalities[p]) + static_cast<std::size_t>(columns[p].categories[r]);
      }
      const int k = bn.cardinalities[v];
      const double* row = bn.cpts[v].data() + config * static_cast<std::size_t>(k);
      const double u = unit(rng);
      double acc = 0.0;
      int value = k - 1;
      for (int c = 0; c < k; ++c) {
        acc += row[c];
        if (u < acc) {
          value = c;
          break;
        }
      }
      columns[v].categories[r] = value;
    }
  }
  return Dataset(std::move(columns));
}

/// Skeleton with v-structures directed, then orientation rules to fixpoint.
inline MixedGraph cpdag_of(const MixedGraph& dag) {
  if (!dag.is_dag()) throw Error(ErrorCode::GraphInvariant, "cpdag_of requires a DAG");
  MixedGraph out = dag.skeleton();
  const std::size_t n = dag.size();
  for (NodeIndex z = 0; z < n; ++z) {
    const NodeSet pa = dag.parents(z);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      for (std::size_t j = i + 1; j < pa.size(); ++j) {
        if (dag.adjacent(pa[i], pa[j])) continue;
        if (out.has_undirected(pa[i], z)) out.orient(pa[i], z);
        if (out.has_undirected(pa[j], z)) out.orient(pa[j], z);
      }
    }
  }
  return apply_orientation_rules(out);
}

inline MixedGraph true_cpdag(const DiscreteBN& bn) { return cpdag_of(bn.dag); }

/// Number of node pairs whose adjacency or edge orientation differs.
inline std::size_t structural_distance(const MixedGraph& g1, const MixedGraph& g2) {
  if (g1.size() != g2.size()) throw Error(ErrorCode::InvalidArgument, "structural_distance: node sets differ");
  for (NodeIndex v = 0; v < g1.size(); ++v) {
    if (g1.node(v).id != g2.node(v).id) throw Error(ErrorCode::InvalidArgument, "structural_distance: node sets differ");
  }
  std::size_t d = 0;
  for (NodeIndex a = 0; a < g1.size(); ++a) {
    for (NodeIndex b = a + 1; b < g1.size(); ++b) {
      const bool same = g1.adjacent(a, b) == g2.adjacent(a, b) && g1.has_directed(a, b) == g2.has_directed(a, b) &&
                        g1.has_directed(b, a) == g2.has_directed(b, a) &&
                        g1.has_bidirected(a, b) == g2.has_bidirected(a, b);
      d += same ? 0 : 1;
    }
  }
  return d;
}

inline Json bn_to_json(const DiscreteBN& bn) {
  return Json{{"dag", graph_to_json(bn.dag)}, {"cardinalities", bn.cardinalities}, {"cpts", bn.cpts}};
}

inline DiscreteBN bn_from_json(const Json& j) {
  DiscreteBN bn;
  try {
    bn.dag = graph_from_json(j.at("dag"));
    bn.cardinalities = j.at("cardinalities").get<std::vector<int>>();
    bn.cpts = j.at("cpts").get<std::vector<std::vector<double>>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed network JSON: ") + e.what());
  }
  const auto problems = bn_violations(bn);
  if (!problems.empty()) throw Error(ErrorCode::InvalidArgument, "invalid network: " + problems.front());
  return bn;
}

/// Random structure with the shape the recursive learner produces: each
/// scope either becomes a gather group or splits into k ancestor groups and
/// one descendant group, with the same latent wiring as the learner. Draws
/// 2..max_observed observed nodes and retries until at most max_latents
/// latents were created.
inline LatentDAG random_latent_dag(std::size_t max_observed, std::size_t max_latents, std::uint64_t seed) {
  if (max_observed < 1) throw Error(ErrorCode::InvalidArgument, "random_latent_dag needs an observed node");
  std::mt19937_64 rng(seed);
  while (true) {
    const std::size_t n_obs = std::uniform_int_distribution<std::size_t>(std::min<std::size_t>(2, max_observed), max_observed)(rng);
    LatentDAG l;
    for (std::size_t v = 0; v < n_obs; ++v) l.graph.add_node(NodeRef::observed("X" + std::to_string(v)));
    std::map<int, int> counters;
    auto add_latent = [&](int n, const NodeSet& children) {
      const NodeIndex h = l.graph.add_node(NodeRef::latent("H" + std::to_string(n) + "_" + std::to_string(++counters[n]), n));
      for (NodeIndex c : children) l.graph.add_directed(h, c);
      return h;
    };
    std::function<NodeSet(const NodeSet&, int, bool)> build = [&](const NodeSet& x, int n, bool top) -> NodeSet {
      const double exit_p = x.size() == 1 ? 1.0 : 0.15 + 0.2 * n;
      if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < exit_p) {
        l.gather_groups.push_back(x);
        return x;
      }
      const std::size_t k = std::uniform_int_distribution<std::size_t>(0, std::min<std::size_t>(3, x.size() - 1))(rng);
      std::vector<NodeSet> groups(k + 1);
      NodeSet shuffled = x;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t g = 0; g <= k; ++g) groups[g].push_back(shuffled[g]);
      for (std::size_t t = k + 1; t < shuffled.size(); ++t) {
        groups[std::uniform_int_distribution<std::size_t>(0, k)(rng)].push_back(shuffled[t]);
      }
      for (auto& g : groups) g = make_set(std::move(g));
      std::vector<NodeSet> roots;
      for (std::size_t g = 0; g < k; ++g) roots.push_back(build(groups[g], n + 1, false));
      const NodeSet d_roots = build(groups[k], n + 1, false);
      if (k == 0) return top ? NodeSet{add_latent(n, d_roots)} : d_roots;
      NodeSet created;
      for (const NodeSet& r : roots) created.push_back(add_latent(n, set_union(r, d_roots)));
      return created;
    };
    NodeSet all(n_obs);
    std::iota(all.begin(), all.end(), NodeIndex{0});
    build(all, 0, true);
    if (l.latents().size() <= max_latents) return l;
  }
}

}  // namespace b2n
