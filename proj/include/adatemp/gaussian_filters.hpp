#pragma once

#include <optional>

#include <Eigen/Dense>

#include "adatemp/ensemble.hpp"
#include "adatemp/localization.hpp"
#include "adatemp/models.hpp"

namespace adatemp {

struct EsrfConfig {
  double inflation = 1.05;
  /// Likelihood exponent of this stage; 1 - alpha inside a hybrid.
  double tempering_exponent = 1.0;
  std::optional<LocalizationConfig> localization;

  void validate() const;
};

/// Square root matrix S, weights w and transform coefficients d of one
/// (local) square-root analysis.
struct EsrfCoefficients {
  MatrixXd s;
  VectorXd weights;
  MatrixXd d;
};

/// S = (I + beta / (N - 1) HA^T R^-1 HA)^(-1/2) via symmetric eigendecomposition.
MatrixXd square_root_matrix(const MatrixXd& obs_anomalies, const MatrixXd& noise_covariance,
                            double beta);

/// Coefficients for observed anomalies HA (N_y x N), mean innovation
/// H(z)bar - y and a weighted precision (R^-1, or its localized form).
EsrfCoefficients esrf_coefficients(const MatrixXd& obs_anomalies,
                                   const VectorXd& mean_innovation,
                                   const MatrixXd& weighted_precision, double beta);

/// Inflation, then z_j^a = sum_i z_i^f d_ij.
Ensemble esrf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                     const EsrfConfig& cfg);

/// Per state component, the same update with C_g R^-1 replacing R^-1.
Ensemble lesrf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                      const EsrfConfig& cfg);

}  // namespace adatemp
