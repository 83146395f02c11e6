#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "b2n/dataset.hpp"
#include "b2n/graph_algorithms.hpp"

namespace b2n {

struct TestResult {
  double statistic = 0.0;
  int dof = 1;
  double p_value = 1.0;
  /// Set when the G² minimum-count guard failed; the decision layer then
  /// treats the pair as dependent.
  bool insufficient_data = false;
};

/// Survival function of the chi-squared distribution.
inline double chi2_survival(double statistic, int dof) {
  if (dof <= 0) throw Error(ErrorCode::InvalidArgument, "chi-squared survival needs dof > 0");
  if (!(statistic > 0.0)) return 1.0;
  if (std::isinf(statistic)) return 0.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

/// Minimum samples per conditioning configuration, per cell of the (i, j)
/// table, before a G² test is trusted.
inline constexpr int kG2MinSamplesPerCell = 5;

namespace detail {

inline void check_query(std::size_t columns, std::size_t i, std::size_t j, const std::vector<std::size_t>& s) {
  if (i >= columns || j >= columns) throw Error(ErrorCode::UnknownNode, "test references unknown column");
  if (i == j) throw Error(ErrorCode::InvalidArgument, "independence test needs two distinct columns");
  for (std::size_t k : s) {
    if (k >= columns) throw Error(ErrorCode::UnknownNode, "conditioning set references unknown column");
    if (k == i || k == j) throw Error(ErrorCode::InvalidArgument, "tested column inside conditioning set");
  }
}

}  // namespace detail

/// G² likelihood-ratio test of column i against j within every configuration
/// of the conditioning columns s.
inline TestResult g2_test(const Dataset& d, std::size_t i, std::size_t j, const NodeSet& s) {
  detail::check_query(d.column_count(), i, j, s);
  std::vector<std::size_t> cols{i, j};
  cols.insert(cols.end(), s.begin(), s.end());
  for (std::size_t c : cols) {
    if (d.column(c).schema.type != ColumnType::Categorical) {
      throw Error(ErrorCode::SchemaMismatch, "G2 test on continuous column '" + d.column(c).name + "'");
    }
  }
  const std::size_t ci = d.column(i).schema.cardinality;
  const std::size_t cj = d.column(j).schema.cardinality;
  const std::size_t cells = ci * cj;
  const std::size_t rows = d.row_count();
  // Configurations beyond rows / (min count) cannot all meet the guard.
  const std::size_t config_cap = rows / (kG2MinSamplesPerCell * cells) + 1;
  std::size_t configs = 1;
  bool overflow = false;
  for (std::size_t k : s) {
    configs *= static_cast<std::size_t>(d.column(k).schema.cardinality);
    if (configs > config_cap) overflow = true;
    if (overflow) break;
  }
  const long long dof_ll =
      static_cast<long long>(ci - 1) * static_cast<long long>(cj - 1) * static_cast<long long>(overflow ? 1 : configs);
  if (dof_ll <= 0) throw Error(ErrorCode::InvalidArgument, "G2 test has non-positive degrees of freedom");

  TestResult result;
  if (overflow) {
    result.insufficient_data = true;
    result.dof = static_cast<int>(std::min<long long>(dof_ll, 1 << 30));
    return result;
  }
  result.dof = static_cast<int>(dof_ll);

  std::vector<std::uint32_t> counts(configs * cells, 0);
  const auto& xi = d.column(i).categories;
  const auto& xj = d.column(j).categories;
  std::vector<const std::vector<int>*> sv;
  std::vector<std::size_t> radix;
  for (std::size_t k : s) {
    sv.push_back(&d.column(k).categories);
    radix.push_back(d.column(k).schema.cardinality);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t config = 0;
    for (std::size_t k = 0; k < sv.size(); ++k) config = config * radix[k] + static_cast<std::size_t>((*sv[k])[r]);
    ++counts[config * cells + static_cast<std::size_t>(xi[r]) * cj + static_cast<std::size_t>(xj[r])];
  }

  double g = 0.0;
  std::vector<double> row_sum(ci), col_sum(cj);
  const double min_count = static_cast<double>(kG2MinSamplesPerCell * cells);
  for (std::size_t c = 0; c < configs; ++c) {
    const std::uint32_t* table = counts.data() + c * cells;
    std::fill(row_sum.begin(), row_sum.end(), 0.0);
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < ci; ++a) {
      for (std::size_t b = 0; b < cj; ++b) {
        const double o = table[a * cj + b];
        row_sum[a] += o;
        col_sum[b] += o;
        total += o;
      }
    }
    if (total < min_count) result.insufficient_data = true;
    if (total == 0.0) continue;
    for (std::size_t a = 0; a < ci; ++a) {
      for (std::size_t b = 0; b < cj; ++b) {
        const double o = table[a * cj + b];
        if (o > 0.0) g += o * std::log(o * total / (row_sum[a] * col_sum[b]));
      }
    }
  }
  result.statistic = std::max(0.0, 2.0 * g);
  result.p_value = chi2_survival(result.statistic, result.dof);
  return result;
}

/// Column correlation matrix with column means removed; throws on a constant
/// column.
inline Eigen::MatrixXd correlation_matrix(const Dataset& d, const std::vector<std::size_t>& cols) {
  const std::size_t k = cols.size();
  const std::size_t n = d.row_count();
  Eigen::MatrixXd centered(n, k);
  for (std::size_t c = 0; c < k; ++c) {
    const Column& col = d.column(cols[c]);
    if (col.schema.type != ColumnType::Continuous) {
      throw Error(ErrorCode::SchemaMismatch, "Fisher-z test on categorical column '" + col.name + "'");
    }
    const Eigen::Map<const Eigen::VectorXd> v(col.reals.data(), static_cast<Eigen::Index>(n));
    centered.col(static_cast<Eigen::Index>(c)) = v.array() - v.mean();
  }
  Eigen::MatrixXd cov = centered.transpose() * centered;
  Eigen::VectorXd sd = cov.diagonal().array().sqrt();
  for (Eigen::Index c = 0; c < sd.size(); ++c) {
    if (!(sd[c] > 0.0)) {
      throw Error(ErrorCode::DegenerateInput, "column '" + d.column(cols[static_cast<std::size_t>(c)]).name + "' is constant");
    }
  }
  return sd.asDiagonal().inverse() * cov * sd.asDiagonal().inverse();
}

/// Partial correlation of variables 0 and 1 of corr given variables 2.. .
inline double partial_correlation(const Eigen::MatrixXd& corr) {
  const Eigen::Index k = corr.rows() - 2;
  if (k == 0) return std::clamp(corr(0, 1), -1.0, 1.0);
  const Eigen::MatrixXd rss = corr.bottomRightCorner(k, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rss);
  if (eig.eigenvalues().minCoeff() < 1e-10) {
    throw Error(ErrorCode::DegenerateInput, "singular correlation submatrix for the conditioning set");
  }
  const Eigen::MatrixXd rxs = corr.topRightCorner(2, k);
  const Eigen::MatrixXd resid = corr.topLeftCorner(2, 2) - rxs * rss.ldlt().solve(rxs.transpose());
  if (resid(0, 0) < 1e-12 || resid(1, 1) < 1e-12) {
    throw Error(ErrorCode::DegenerateInput, "tested variable is determined by the conditioning set");
  }
  return std::clamp(resid(0, 1) / std::sqrt(resid(0, 0) * resid(1, 1)), -1.0, 1.0);
}

/// Fisher-z statistic from a partial correlation; |r| = 1 saturates to p = 0.
inline TestResult fisher_z_from_partial(double r, std::size_t rows, std::size_t cond_size) {
  if (rows <= cond_size + 3) {
    throw Error(ErrorCode::InsufficientRows, "Fisher-z test needs more than |S| + 3 rows");
  }
  constexpr double kMaxAbs = 1.0 - 1e-15;
  const double clamped = std::clamp(r, -kMaxAbs, kMaxAbs);
  TestResult out;
  out.dof = 1;
  out.statistic = std::sqrt(static_cast<double>(rows - cond_size - 3)) * std::abs(std::atanh(clamped));
  out.p_value = std::erfc(out.statistic / std::sqrt(2.0));
  return out;
}

inline TestResult fisher_z_test(const Dataset& d, std::size_t i, std::size_t j, const NodeSet& s) {
  detail::check_query(d.column_count(), i, j, s);
  if (d.row_count() <= s.size() + 3) {
    throw Error(ErrorCode::InsufficientRows, "Fisher-z test needs more than |S| + 3 rows");
  }
  std::vector<std::size_t> cols{i, j};
  cols.insert(cols.end(), s.begin(), s.end());
  return fisher_z_from_partial(partial_correlation(correlation_matrix(d, cols)), d.row_count(), s.size());
}

enum class TestKind { G2, FisherZ, Oracle };

inline std::string_view to_string(TestKind k) {
  switch (k) {
    case TestKind::G2: return "g2";
    case TestKind::FisherZ: return "fisher-z";
    case TestKind::Oracle: return "oracle";
  }
  return "g2";
}

inline constexpr double kDefaultAlpha = 0.01;

/// One answered query, as reported to listeners.
struct QueryEvent {
  NodeIndex i;
  NodeIndex j;
  NodeSet s;
  bool independent;
  bool cached;
  std::optional<TestResult> result;  // absent for the oracle backend
};

/// Deterministic, cached answers to "is i independent of j given s?",
/// backed either by statistical tests on a dataset or by d-separation in a
/// known DAG.
class IndependenceSource {
 public:
  static IndependenceSource from_data(std::shared_ptr<const Dataset> data, TestKind kind, double alpha = kDefaultAlpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    if (kind == TestKind::Oracle) throw Error(ErrorCode::InvalidArgument, "oracle backend needs a DAG");
    IndependenceSource src;
    DataBackend backend{std::move(data), kind, alpha, {}};
    if (kind == TestKind::G2 && !backend.data->all_categorical()) {
      throw Error(ErrorCode::SchemaMismatch, "G2 test requires every column to be categorical");
    }
    if (kind == TestKind::FisherZ) {
      std::vector<std::size_t> all(backend.data->column_count());
      std::iota(all.begin(), all.end(), std::size_t{0});
      backend.corr = correlation_matrix(*backend.data, all);
    }
    src.backend_ = std::move(backend);
    return src;
  }

  static IndependenceSource from_dag(const MixedGraph& dag) {
    IndependenceSource src;
    src.backend_ = OracleBackend{std::make_shared<DSeparation>(dag), dag.size()};
    return src;
  }

  IndependenceSource(IndependenceSource&& other) noexcept { *this = std::move(other); }
  IndependenceSource& operator=(IndependenceSource&& other) noexcept {
    backend_ = std::move(other.backend_);
    cache_ = std::move(other.cache_);
    sepsets_ = std::move(other.sepsets_);
    listener_ = std::move(other.listener_);
    evaluations_ = other.evaluations_;
    order_stats_ = std::move(other.order_stats_);
    return *this;
  }

  TestKind kind() const {
    if (const auto* d = std::get_if<DataBackend>(&backend_)) return d->kind;
    return TestKind::Oracle;
  }

  double alpha() const {
    if (const auto* d = std::get_if<DataBackend>(&backend_)) return d->alpha;
    return 0.0;
  }

  std::size_t variable_count() const {
    if (const auto* d = std::get_if<DataBackend>(&backend_)) return d->data->column_count();
    return std::get<OracleBackend>(backend_).nodes;
  }

  bool is_independent(NodeIndex i, NodeIndex j, const NodeSet& s_in) {
    const NodeSet s = make_set(s_in);
    detail::check_query(variable_count(), i, j, s);
    auto key = std::make_tuple(std::min(i, j), std::max(i, j), s);
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      notify({i, j, s, it->second.independent, true, it->second.result});
      return it->second.independent;
    }
    Answer answer = evaluate(std::get<0>(key), std::get<1>(key), s);
    ++evaluations_;
    auto& stats = order_stats_[s.size()];
    ++stats.tests;
    stats.independent += answer.independent ? 1 : 0;
    cache_.emplace(std::move(key), answer);
    notify({i, j, s, answer.independent, false, answer.result});
    return answer.independent;
  }

  /// Number of underlying test evaluations (cache misses).
  std::size_t evaluations() const noexcept { return evaluations_; }

  SepsetRegistry& sepsets() noexcept { return sepsets_; }
  const SepsetRegistry& sepsets() const noexcept { return sepsets_; }

  struct OrderStats {
    std::size_t tests = 0;
    std::size_t independent = 0;
  };
  /// Evaluated tests and independence findings per condition-set size.
  const std::map<std::size_t, OrderStats>& order_stats() const noexcept { return order_stats_; }

  void set_listener(std::function<void(const QueryEvent&)> listener) { listener_ = std::move(listener); }

 private:
  IndependenceSource() = default;

  struct DataBackend {
    std::shared_ptr<const Dataset> data;
    TestKind kind;
    double alpha;
    Eigen::MatrixXd corr;
  };
  struct OracleBackend {
    std::shared_ptr<DSeparation> dsep;
    std::size_t nodes;
  };
  struct Answer {
    bool independent;
    std::optional<TestResult> result;
  };

  Answer evaluate(NodeIndex i, NodeIndex j, const NodeSet& s) const {
    if (const auto* o = std::get_if<OracleBackend>(&backend_)) {
      return {o->dsep->separated(i, j, s), std::nullopt};
    }
    const auto& d = std::get<DataBackend>(backend_);
    TestResult r;
    if (d.kind == TestKind::G2) {
      r = g2_test(*d.data, i, j, s);
    } else {
      std::vector<Eigen::Index> idx{static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)};
      for (NodeIndex k : s) idx.push_back(static_cast<Eigen::Index>(k));
      Eigen::MatrixXd sub(idx.size(), idx.size());
      for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = d.corr(idx[a], idx[b]);
      }
      r = fisher_z_from_partial(partial_correlation(sub), d.data->row_count(), s.size());
    }
    return {!r.insufficient_data && r.p_value > d.alpha, r};
  }

  void notify(const QueryEvent& e) const {
    if (listener_) listener_(e);
  }

  std::variant<DataBackend, OracleBackend> backend_;
  std::map<std::tuple<NodeIndex, NodeIndex, NodeSet>, Answer> cache_;
  SepsetRegistry sepsets_;
  std::function<void(const QueryEvent&)> listener_;
  std::size_t evaluations_ = 0;
  std::map<std::size_t, OrderStats> order_stats_;
  std::mutex mutex_;
};

}  // namespace b2n
