#pragma once

#include <Eigen/Dense>

namespace adatemp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Nonnegative transport plan; row sums match the row marginals and column
/// sums the column marginals.
struct CouplingMatrix {
  MatrixXd transport;
  double objective = 0.0;  // sum_ij t_ij c_ij
};

enum class OtSolver { kExact, kSinkhorn };

struct SinkhornOptions {
  /// Regularization lambda = scale * median(cost).
  double scale = 0.05;
  int max_iterations = 10000;
  double tolerance = 1e-10;
};

/// Exact solution of the transportation problem by the primal network simplex
/// on the dense bipartite graph (least-cost initial basis, Dantzig pricing,
/// lowest-index tie breaking, Bland's rule during degenerate stalls).
CouplingMatrix solve_ot_exact(const MatrixXd& cost, const VectorXd& row_marginals,
                              const VectorXd& col_marginals);

/// Entropy-regularized coupling by log-domain Sinkhorn iterations. Throws
/// NumericalError if the marginal defect stays above 1e-8.
CouplingMatrix solve_ot_sinkhorn(const MatrixXd& cost, const VectorXd& row_marginals,
                                 const VectorXd& col_marginals,
                                 const SinkhornOptions& options = {});

CouplingMatrix solve_ot(const MatrixXd& cost, const VectorXd& row_marginals,
                        const VectorXd& col_marginals, OtSolver solver = OtSolver::kExact,
                        const SinkhornOptions& options = {});

}  // namespace adatemp
