#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adatemp/rng.hpp"

namespace adatemp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Ensemble of state vectors. Column i is member z_i; rows index state
/// components. Holds at least two members with finite entries.
class Ensemble {
 public:
  explicit Ensemble(MatrixXd members);

  Index dim() const { return members_.rows(); }
  Index size() const { return members_.cols(); }

  const MatrixXd& members() const { return members_; }
  auto member(Index i) const { return members_.col(i); }

 private:
  MatrixXd members_;
};

/// Nonnegative weights summing to one.
class WeightVector {
 public:
  static WeightVector uniform(Index n);
  /// Normalizes nonnegative raw weights; throws NumericalError("degenerate
  /// weights") when they are all zero or not finite.
  static WeightVector from_unnormalized(const VectorXd& raw);
  /// Normalizes exp(log_weights) after shifting by the maximum so that
  /// likelihood underflow cannot zero every entry.
  static WeightVector from_log(const VectorXd& log_weights);

  const VectorXd& values() const { return w_; }
  double operator[](Index i) const { return w_(i); }
  Index size() const { return w_.size(); }

 private:
  explicit WeightVector(VectorXd w) : w_(std::move(w)) {}
  VectorXd w_;
};

struct EnsembleStatistics {
  VectorXd mean;
  MatrixXd anomalies;
};

struct Quartiles {
  double q1;
  double q2;
  double q3;
};

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// How the rejuvenation noise amplitude is scaled with the ensemble size.
enum class RejuvenationScaling {
  kSqrt,    // tau / sqrt(N_ens - 1)
  kLinear,  // tau / (N_ens - 1)
};

EnsembleStatistics ensemble_statistics(const Ensemble& e);

/// Scales anomalies about the mean by gamma >= 1.
Ensemble apply_inflation(const Ensemble& e, double gamma);

/// Draws the additive rejuvenation perturbation A * xi * scale for the given
/// anomaly matrix, one independent standard normal xi_ij per pair.
MatrixXd rejuvenation_noise(const MatrixXd& anomalies, double tau, RngStream& rng,
                            RejuvenationScaling scaling = RejuvenationScaling::kSqrt);

/// Perturbs every member with anomaly-weighted Gaussian noise of E itself.
Ensemble apply_rejuvenation(const Ensemble& e, double tau, RngStream& rng,
                            RejuvenationScaling scaling = RejuvenationScaling::kSqrt);

/// 1 / sum w_i^2.
double effective_sample_size(const WeightVector& w);

/// Quartiles at 1-based positions i (N + 1) / 4 of the sorted sample, linearly
/// interpolated between neighbouring order statistics.
Quartiles quartiles(std::span<const double> values);

/// [Q1 - factor * IQR, Q3 + factor * IQR].
Interval iqr_interval(std::span<const double> values, double factor);

/// Time average of the per-cycle root mean squared componentwise error,
/// cycles before `skip` excluded.
double rmse(const std::vector<VectorXd>& estimates, const std::vector<VectorXd>& truth,
            std::size_t skip);

}  // namespace adatemp
