#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "adatemp/ensemble.hpp"
#include "adatemp/localization.hpp"
#include "adatemp/models.hpp"
#include "adatemp/optimal_transport.hpp"
#include "adatemp/rng.hpp"

namespace adatemp {

enum class Resampler { kMultinomial, kSystematic };

struct PfConfig {
  /// Likelihood exponent alpha in (0, 1].
  double tempering_exponent = 1.0;
  double rejuvenation = 0.2;
  RejuvenationScaling scaling = RejuvenationScaling::kSqrt;
  Resampler resampler = Resampler::kMultinomial;
  OtSolver ot_solver = OtSolver::kExact;
  SinkhornOptions sinkhorn;
  std::optional<LocalizationConfig> localization;
  /// LETPF: one rejuvenation draw for the whole state instead of one per grid point.
  bool global_rejuvenation = false;

  void validate() const;
};

/// w_i proportional to exp(-alpha/2 (H z_i - y)^T P (H z_i - y)) for a given
/// precision P, evaluated in log space.
WeightVector weights_from_precision(const MatrixXd& observed, const VectorXd& y,
                                    const MatrixXd& precision, double alpha);

WeightVector importance_weights(const Ensemble& e, const VectorXd& y,
                                const ObservationModel& obs, double alpha);

std::vector<Index> resample(const WeightVector& w, RngStream& rng,
                            Resampler method = Resampler::kMultinomial);

/// Pairwise squared Euclidean distances between members.
MatrixXd squared_distances(const MatrixXd& members);

Ensemble bootstrap_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                          const PfConfig& cfg, RngStream& rng);

Ensemble etpf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                     const PfConfig& cfg, RngStream& rng);

/// Local coupling of one grid point, exposed for diagnostics.
struct LocalCoupling {
  double position;
  std::vector<Index> components;
  WeightVector weights;
  CouplingMatrix coupling;
};

std::vector<LocalCoupling> letpf_couplings(const Ensemble& e, const VectorXd& y,
                                           const ObservationModel& obs, const PfConfig& cfg);

Ensemble letpf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                      const PfConfig& cfg, RngStream& rng);

}  // namespace adatemp
