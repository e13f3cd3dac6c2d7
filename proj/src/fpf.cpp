#include "adatemp/fpf.hpp"

#include <cmath>

#include "adatemp/error.hpp"
#include "adatemp/particle_filters.hpp"

namespace adatemp {

void FpfConfig::validate() const {
  if (!(epsilon > 0.0)) {
    throw ConfigError("FPF bandwidth epsilon must be > 0");
  }
  if (!(tempering_exponent > 0.0 && tempering_exponent <= 1.0)) {
    throw ConfigError("FPF tempering exponent must lie in (0, 1]");
  }
  if (!(rejuvenation >= 0.0)) {
    throw ConfigError("rejuvenation parameter must be >= 0");
  }
  if (solver == GainSolver::kFixedPoint && iterations < 1) {
    throw ConfigError("FPF fixed-point iteration count must be >= 1");
  }
}

KernelMatrices kernel_matrices(const Ensemble& e, double eps_eff) {
  if (!(eps_eff > 0.0)) {
    throw ConfigError("kernel bandwidth must be > 0");
  }
  KernelMatrices out;
  out.g = (-squared_distances(e.members()) / (4.0 * eps_eff)).array().exp();
  const VectorXd root = out.g.rowwise().sum().cwiseSqrt();
  out.k = root.cwiseInverse().asDiagonal() * out.g * root.cwiseInverse().asDiagonal();
  return out;
}

MarkovMatrix markov_matrix(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                           double eps_eff, double alpha) {
  const auto kernel = kernel_matrices(e, eps_eff);
  MarkovMatrix m;
  m.obs = obs.observe(e);
  const VectorXd l = weights_from_precision(m.obs, y, obs.noise_precision(), alpha).values();
  MatrixXd weighted = kernel.k * l.asDiagonal();
  m.d = weighted.rowwise().sum();
  if (!(m.d.minCoeff() > 0.0)) {
    throw NumericalError("degenerate weights");
  }
  m.t = m.d.cwiseInverse().asDiagonal() * weighted;
  m.pi = m.d / m.d.sum();
  return m;
}

double effective_bandwidth(const Ensemble& e, double epsilon) {
  return epsilon * squared_distances(e.members()).maxCoeff();
}

GainField solve_gain(const Ensemble& e, const MarkovMatrix& m, const ObservationModel& obs,
                     double eps_eff, double alpha, GainSolver solver, int iterations) {
  const Index n = e.size();
  // The gain depends on H only through differences; shifting by H(z_0)
  // keeps a constant observable exactly zero.
  const MatrixXd hz = m.obs.colwise() - m.obs.col(0);
  const VectorXd h_hat = hz * m.pi;
  const MatrixXd precision = alpha * obs.noise_precision();
  const MatrixXd rinv_h = precision * hz;  // N_y x N
  const MatrixXd rhs = eps_eff * (precision * (hz.colwise() - h_hat)).transpose();

  GainField out;
  out.eps_eff = eps_eff;
  if (solver == GainSolver::kDirect) {
    MatrixXd a = MatrixXd::Identity(n, n) - m.t;
    a.array() += 1.0 / static_cast<double>(n);
    Eigen::FullPivLU<MatrixXd> lu(a);
    if (!lu.isInvertible()) {
      throw NumericalError("gain solve failed");
    }
    out.phi = lu.solve(rhs);
    const double scale = std::max(rhs.norm(), 1e-300);
    if (!out.phi.allFinite() || (a * out.phi - rhs).norm() > 1e-10 * scale) {
      throw NumericalError("gain solve failed");
    }
  } else {
    out.phi = MatrixXd::Zero(n, rhs.cols());
    for (int it = 0; it < iterations; ++it) {
      out.phi = m.t * out.phi + rhs;
      out.phi.rowwise() -= m.pi.transpose() * out.phi;
    }
    if (!out.phi.allFinite()) {
      throw NumericalError("gain solve failed");
    }
  }
  out.phi.rowwise() -= m.pi.transpose() * out.phi;

  MatrixXd r = out.phi + eps_eff * rinv_h.transpose();  // N x N_y
  r.rowwise() -= r.row(0).eval();
  const MatrixXd tr = m.t * r;
  out.gains.assign(static_cast<std::size_t>(n), MatrixXd::Zero(e.dim(), hz.rows()));
  for (Index c = 0; c < hz.rows(); ++c) {
    MatrixXd s = m.t;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        s(i, j) *= (r(j, c) - tr(i, c)) / (2.0 * eps_eff);
      }
    }
    const MatrixXd k = e.members() * s.transpose();  // column i = K_i for component c
    for (Index i = 0; i < n; ++i) {
      out.gains[static_cast<std::size_t>(i)].col(c) = k.col(i);
    }
  }
  return out;
}

GainField solve_gain(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                     const FpfConfig& cfg) {
  cfg.validate();
  const double eps_eff = effective_bandwidth(e, cfg.epsilon);
  if (!(eps_eff > 0.0)) {
    throw NumericalError("gain solve failed");
  }
  const auto m = markov_matrix(e, y, obs, eps_eff, cfg.tempering_exponent);
  return solve_gain(e, m, obs, eps_eff, cfg.tempering_exponent, cfg.solver, cfg.iterations);
}

Ensemble fpf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                    const FpfConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (y.size() != obs.obs_dim()) {
    throw ConfigError("observation vector has the wrong dimension");
  }
  const auto stats = ensemble_statistics(e);
  const double eps_eff = effective_bandwidth(e, cfg.epsilon);
  MatrixXd za = e.members();
  if (eps_eff > 0.0) {
    const auto m = markov_matrix(e, y, obs, eps_eff, cfg.tempering_exponent);
    const auto gain =
        solve_gain(e, m, obs, eps_eff, cfg.tempering_exponent, cfg.solver, cfg.iterations);
    const VectorXd h_mean = obs.observe(stats.mean);
    for (Index i = 0; i < e.size(); ++i) {
      const VectorXd misfit = 0.5 * (m.obs.col(i) + h_mean) - y;
      za.col(i) -= gain.gains[static_cast<std::size_t>(i)] * misfit;
    }
  }
  za += rejuvenation_noise(stats.anomalies, cfg.rejuvenation, rng, cfg.scaling);
  return Ensemble(std::move(za));
}

}  // namespace adatemp
