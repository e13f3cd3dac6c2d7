#include "adatemp/optimal_transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "adatemp/error.hpp"

namespace adatemp {

namespace {

using Eigen::Index;

void check_problem(const MatrixXd& cost, const VectorXd& a, const VectorXd& b) {
  if (cost.rows() != a.size() || cost.cols() != b.size() || a.size() == 0 || b.size() == 0) {
    throw ConfigError("optimal transport: cost and marginal shapes disagree");
  }
  if (!cost.allFinite()) {
    throw ConfigError("optimal transport: cost entries must be finite");
  }
  if ((a.array() < 0.0).any() || (b.array() < 0.0).any()) {
    throw ConfigError("infeasible marginals: negative mass");
  }
  if (std::abs(a.sum() - 1.0) > 1e-9 || std::abs(b.sum() - 1.0) > 1e-9) {
    throw ConfigError("infeasible marginals: both must sum to 1");
  }
}

// Spanning-tree basis of the transportation polytope.
class TransportSimplex {
 public:
  TransportSimplex(const MatrixXd& cost, const VectorXd& a, const VectorXd& b)
      : cost_(cost),
        n_(cost.rows()),
        m_(cost.cols()),
        flow_(MatrixXd::Zero(n_, m_)),
        basic_(static_cast<std::size_t>(n_ * m_), 0),
        u_(n_),
        v_(m_) {
    initial_basis(a, b);
  }

  CouplingMatrix solve() {
    const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    const long max_pivots = 50L * n_ * m_ + 1000;
    const long stall_limit = 2L * (n_ + m_);
    long degenerate_run = 0;
    for (long pivot = 0; pivot < max_pivots; ++pivot) {
      build_tree();
      const bool bland = degenerate_run > stall_limit;
      Index ei = -1;
      Index ej = -1;
      double best = -tol;
      for (Index i = 0; i < n_ && !(bland && ei >= 0); ++i) {
        for (Index j = 0; j < m_; ++j) {
          if (basic_[cell(i, j)]) continue;
          const double reduced = cost_(i, j) - u_(i) - v_(j);
          if (reduced < best) {
            best = reduced;
            ei = i;
            ej = j;
            if (bland) break;
          }
        }
      }
      if (ei < 0) {
        CouplingMatrix out{flow_, 0.0};
        out.objective = flow_.cwiseProduct(cost_).sum();
        return out;
      }
      const double theta = pivot_on(ei, ej);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }
    throw NumericalError("optimal transport: simplex iteration limit reached");
  }

 private:
  std::size_t cell(Index i, Index j) const { return static_cast<std::size_t>(i * m_ + j); }

  void add_basic(Index i, Index j) {
    basic_[cell(i, j)] = 1;
    basis_.push_back(cell(i, j));
  }

  // Least-cost method: every allocation retires exactly one row or column,
  // which yields n + m - 1 basic cells forming a spanning tree.
  void initial_basis(const VectorXd& a, const VectorXd& b) {
    std::vector<std::size_t> order(static_cast<std::size_t>(n_ * m_));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return cost_(static_cast<Index>(x) / m_, static_cast<Index>(x) % m_) <
             cost_(static_cast<Index>(y) / m_, static_cast<Index>(y) % m_);
    });
    std::vector<double> ra(a.data(), a.data() + n_);
    std::vector<double> rb(b.data(), b.data() + m_);
    std::vector<char> row_alive(static_cast<std::size_t>(n_), 1);
    std::vector<char> col_alive(static_cast<std::size_t>(m_), 1);
    Index rows_left = n_;
    Index cols_left = m_;
    const Index needed = n_ + m_ - 1;
    Index placed = 0;
    for (std::size_t k = 0; k < order.size() && placed < needed; ++k) {
      const Index i = static_cast<Index>(order[k]) / m_;
      const Index j = static_cast<Index>(order[k]) % m_;
      if (!row_alive[i] || !col_alive[j]) continue;
      const double x = std::min(ra[i], rb[j]);
      flow_(i, j) = x;
      add_basic(i, j);
      ++placed;
      ra[i] -= x;
      rb[j] -= x;
      const bool retire_row = (ra[i] <= rb[j] && rows_left > 1) || cols_left == 1;
      if (retire_row) {
        // Leftover rounding mass on the retired line is pushed to this cell.
        if (ra[i] > 0.0) flow_(i, j) += ra[i];
        row_alive[i] = 0;
        --rows_left;
      } else {
        col_alive[j] = 0;
        --cols_left;
      }
    }
  }

  // Potentials u_i + v_j = c_ij on basic cells, parent links rooted at row 0.
  void build_tree() {
    const Index nodes = n_ + m_;
    adjacency_.assign(static_cast<std::size_t>(nodes), {});
    for (std::size_t c : basis_) {
      const Index i = static_cast<Index>(c) / m_;
      const Index j = static_cast<Index>(c) % m_;
      adjacency_[i].push_back(n_ + j);
      adjacency_[n_ + j].push_back(i);
    }
    parent_.assign(static_cast<std::size_t>(nodes), -1);
    depth_.assign(static_cast<std::size_t>(nodes), -1);
    std::vector<Index> queue{0};
    depth_[0] = 0;
    u_(0) = 0.0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const Index node = queue[q];
      for (Index next : adjacency_[node]) {
        if (depth_[next] >= 0) continue;
        depth_[next] = depth_[node] + 1;
        parent_[next] = node;
        if (next >= n_) {
          v_(next - n_) = cost_(node, next - n_) - u_(node);
        } else {
          u_(next) = cost_(next, node - n_) - v_(node - n_);
        }
        queue.push_back(next);
      }
    }
    if (static_cast<Index>(queue.size()) != nodes) {
      throw NumericalError("optimal transport: basis is not a spanning tree");
    }
  }

  // Adds cell (ei, ej), returns the step length theta.
  double pivot_on(Index ei, Index ej) {
    // Tree path from column node ej to row node ei.
    std::vector<Index> from_col{n_ + ej};
    std::vector<Index> from_row{ei};
    Index x = n_ + ej;
    Index y = ei;
    while (depth_[x] > depth_[y]) {
      x = parent_[x];
      from_col.push_back(x);
    }
    while (depth_[y] > depth_[x]) {
      y = parent_[y];
      from_row.push_back(y);
    }
    while (x != y) {
      x = parent_[x];
      y = parent_[y];
      from_col.push_back(x);
      from_row.push_back(y);
    }
    from_row.pop_back();
    std::vector<Index> path = from_col;
    path.insert(path.end(), from_row.rbegin(), from_row.rend());
    // Edges path[t] - path[t+1]; even t lose flow, odd t gain it.
    auto edge_cell = [&](std::size_t t) {
      const Index p = path[t];
      const Index q = path[t + 1];
      return p >= n_ ? cell(q, p - n_) : cell(p, q - n_);
    };
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = 0;
    for (std::size_t t = 0; t + 1 < path.size(); t += 2) {
      const std::size_t c = edge_cell(t);
      const double f = flow_(static_cast<Index>(c) / m_, static_cast<Index>(c) % m_);
      if (f < theta || (f == theta && c < leaving)) {
        theta = f;
        leaving = c;
      }
    }
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
      const std::size_t c = edge_cell(t);
      double& f = flow_(static_cast<Index>(c) / m_, static_cast<Index>(c) % m_);
      f = (t % 2 == 0) ? f - theta : f + theta;
    }
    flow_(static_cast<Index>(leaving) / m_, static_cast<Index>(leaving) % m_) = 0.0;
    flow_(ei, ej) = theta;
    basic_[leaving] = 0;
    *std::find(basis_.begin(), basis_.end(), leaving) = cell(ei, ej);
    basic_[cell(ei, ej)] = 1;
    return theta;
  }

  const MatrixXd& cost_;
  Index n_;
  Index m_;
  MatrixXd flow_;
  std::vector<char> basic_;
  std::vector<std::size_t> basis_;
  std::vector<std::vector<Index>> adjacency_;
  std::vector<Index> parent_;
  std::vector<Index> depth_;
  VectorXd u_;
  VectorXd v_;
};

double median(const MatrixXd& m) {
  std::vector<double> values(m.data(), m.data() + m.size());
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  double med = values[mid];
  if (values.size() % 2 == 0) {
    const double lower =
        *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
    med = 0.5 * (med + lower);
  }
  return med;
}

double log_sum_exp(const VectorXd& x) {
  const double top = x.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((x.array() - top).exp().sum());
}

}  // namespace

CouplingMatrix solve_ot_exact(const MatrixXd& cost, const VectorXd& row_marginals,
                              const VectorXd& col_marginals) {
  check_problem(cost, row_marginals, col_marginals);
  return TransportSimplex(cost, row_marginals, col_marginals).solve();
}

CouplingMatrix solve_ot_sinkhorn(const MatrixXd& cost, const VectorXd& row_marginals,
                                 const VectorXd& col_marginals,
                                 const SinkhornOptions& options) {
  check_problem(cost, row_marginals, col_marginals);
  const Index n = cost.rows();
  const Index m = cost.cols();
  double lambda = options.scale * median(cost);
  if (!(lambda > 0.0)) {
    lambda = options.scale * cost.cwiseAbs().mean();
  }
  if (!(lambda > 0.0)) {
    // Constant cost: every feasible plan is optimal.
    MatrixXd t = row_marginals * col_marginals.transpose();
    return {t, t.cwiseProduct(cost).sum()};
  }
  const VectorXd log_a = row_marginals.array().log();
  const VectorXd log_b = col_marginals.array().log();
  VectorXd f = VectorXd::Zero(n);
  VectorXd g = VectorXd::Zero(m);
  const MatrixXd scaled = -cost / lambda;
  auto plan = [&]() {
    MatrixXd t(n, m);
    for (Index j = 0; j < m; ++j) {
      for (Index i = 0; i < n; ++i) {
        t(i, j) = std::exp(scaled(i, j) + f(i) + g(j));
      }
    }
    return t;
  };
  double defect = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    for (Index i = 0; i < n; ++i) {
      f(i) = row_marginals(i) > 0.0
                 ? log_a(i) - log_sum_exp((scaled.row(i).transpose() + g).eval())
                 : -std::numeric_limits<double>::infinity();
    }
    for (Index j = 0; j < m; ++j) {
      g(j) = col_marginals(j) > 0.0 ? log_b(j) - log_sum_exp((scaled.col(j) + f).eval())
                                    : -std::numeric_limits<double>::infinity();
    }
    if (it % 10 == 9 || it + 1 == options.max_iterations) {
      defect = (plan().rowwise().sum() - row_marginals).cwiseAbs().maxCoeff();
      if (defect <= options.tolerance) break;
    }
  }
  if (!(defect <= 1e-8)) {
    throw NumericalError("Sinkhorn did not reach the marginal tolerance");
  }
  MatrixXd t = plan();
  return {t, t.cwiseProduct(cost).sum()};
}

CouplingMatrix solve_ot(const MatrixXd& cost, const VectorXd& row_marginals,
                        const VectorXd& col_marginals, OtSolver solver,
                        const SinkhornOptions& options) {
  return solver == OtSolver::kExact
             ? solve_ot_exact(cost, row_marginals, col_marginals)
             : solve_ot_sinkhorn(cost, row_marginals, col_marginals, options);
}

}  // namespace adatemp
