#include "adatemp/gaussian_filters.hpp"

#include <cmath>
#include <map>

#include "adatemp/error.hpp"

namespace adatemp {

namespace {

constexpr double kEigenFloor = 1e-14;

struct Observed {
  MatrixXd anomalies;
  VectorXd mean_innovation;
};

Observed observe_anomalies(const Ensemble& e, const VectorXd& y, const ObservationModel& obs) {
  if (y.size() != obs.obs_dim()) {
    throw ConfigError("observation vector has the wrong dimension");
  }
  const MatrixXd hz = obs.observe(e);
  const VectorXd mean = hz.rowwise().mean();
  return {hz.colwise() - mean, mean - y};
}

}  // namespace

void EsrfConfig::validate() const {
  if (!(inflation >= 1.0)) {
    throw ConfigError("inflation factor must be >= 1");
  }
  if (!(tempering_exponent >= 0.0 && tempering_exponent <= 1.0)) {
    throw ConfigError("ESRF tempering exponent must lie in [0, 1]");
  }
}

EsrfCoefficients esrf_coefficients(const MatrixXd& obs_anomalies,
                                   const VectorXd& mean_innovation,
                                   const MatrixXd& weighted_precision, double beta) {
  const Index n = obs_anomalies.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  if (beta == 0.0) {
    EsrfCoefficients out{MatrixXd::Identity(n, n), VectorXd::Constant(n, inv_n),
                         MatrixXd::Identity(n, n)};
    return out;
  }
  const double scale = beta / static_cast<double>(n - 1);
  const MatrixXd weighted = weighted_precision * obs_anomalies;  // N_y x N
  MatrixXd a = MatrixXd::Identity(n, n) + scale * (obs_anomalies.transpose() * weighted);
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("square root matrix: eigendecomposition failed");
  }
  const VectorXd lambda = eig.eigenvalues().cwiseMax(kEigenFloor);
  const MatrixXd& v = eig.eigenvectors();
  EsrfCoefficients out;
  out.s = v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  const MatrixXd s2 = v * lambda.cwiseInverse().asDiagonal() * v.transpose();
  const VectorXd innovation_weight = weighted.transpose() * mean_innovation;  // N
  out.weights = VectorXd::Constant(n, inv_n) - scale * (s2 * innovation_weight);
  out.d = out.s;
  for (Index j = 0; j < n; ++j) {
    out.d.col(j) += out.weights - VectorXd::Constant(n, inv_n);
  }
  return out;
}

MatrixXd square_root_matrix(const MatrixXd& obs_anomalies, const MatrixXd& noise_covariance,
                            double beta) {
  if (noise_covariance.rows() != obs_anomalies.rows() ||
      noise_covariance.cols() != obs_anomalies.rows()) {
    throw ConfigError("square_root_matrix: R has the wrong shape");
  }
  Eigen::LLT<MatrixXd> llt(noise_covariance);
  if (llt.info() != Eigen::Success ||
      !noise_covariance.isApprox(noise_covariance.transpose(), 1e-12)) {
    throw ConfigError("square_root_matrix: R must be symmetric positive definite");
  }
  const MatrixXd precision = llt.solve(MatrixXd::Identity(noise_covariance.rows(),
                                                          noise_covariance.cols()));
  const VectorXd zero = VectorXd::Zero(obs_anomalies.rows());
  return esrf_coefficients(obs_anomalies, zero, precision, beta).s;
}

Ensemble esrf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                     const EsrfConfig& cfg) {
  cfg.validate();
  if (cfg.tempering_exponent == 0.0) {
    return e;
  }
  const Ensemble inflated = apply_inflation(e, cfg.inflation);
  const Observed o = observe_anomalies(inflated, y, obs);
  const auto coeff = esrf_coefficients(o.anomalies, o.mean_innovation, obs.noise_precision(),
                                       cfg.tempering_exponent);
  return Ensemble(inflated.members() * coeff.d);
}

Ensemble lesrf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                      const EsrfConfig& cfg) {
  cfg.validate();
  if (!cfg.localization) {
    throw ConfigError("lesrf_update requires a localization configuration");
  }
  const auto& loc = *cfg.localization;
  loc.validate(e.dim(), obs.obs_dim());
  if (cfg.tempering_exponent == 0.0) {
    return e;
  }
  const Ensemble inflated = apply_inflation(e, cfg.inflation);
  const Observed o = observe_anomalies(inflated, y, obs);
  const MatrixXd& zf = inflated.members();
  MatrixXd za = zf;

  // Components sharing a grid position share the local transform.
  std::map<double, MatrixXd> transforms;
  for (Index g = 0; g < e.dim(); ++g) {
    const double x_g = loc.state_positions[static_cast<std::size_t>(g)];
    auto it = transforms.find(x_g);
    if (it == transforms.end()) {
      const VectorXd c = localization_weights(loc, x_g);
      std::vector<Index> active;
      for (Index l = 0; l < c.size(); ++l) {
        if (c(l) > 0.0) active.push_back(l);
      }
      MatrixXd d;
      if (!active.empty()) {
        const auto m = static_cast<Index>(active.size());
        MatrixXd ha(m, e.size());
        VectorXd innov(m);
        VectorXd sqrt_c(m);
        MatrixXd prec(m, m);
        for (Index a = 0; a < m; ++a) {
          ha.row(a) = o.anomalies.row(active[a]);
          innov(a) = o.mean_innovation(active[a]);
          sqrt_c(a) = std::sqrt(c(active[a]));
        }
        for (Index a = 0; a < m; ++a) {
          for (Index b = 0; b < m; ++b) {
            prec(a, b) = sqrt_c(a) * obs.noise_precision()(active[a], active[b]) * sqrt_c(b);
          }
        }
        d = esrf_coefficients(ha, innov, prec, cfg.tempering_exponent).d;
      }
      it = transforms.emplace(x_g, std::move(d)).first;
    }
    if (it->second.size() > 0) {
      za.row(g) = zf.row(g) * it->second;
    }
  }
  return Ensemble(std::move(za));
}

}  // namespace adatemp
