#include "adatemp/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "adatemp/error.hpp"

namespace adatemp {

Ensemble::Ensemble(MatrixXd members) : members_(std::move(members)) {
  if (members_.cols() < 2) {
    throw ConfigError("ensemble needs N_ens >= 2 members");
  }
  if (members_.rows() < 1) {
    throw ConfigError("ensemble members must have positive dimension");
  }
  if (!members_.allFinite()) {
    throw NumericalError("ensemble contains non-finite entries");
  }
}

WeightVector WeightVector::uniform(Index n) {
  return WeightVector(VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

WeightVector WeightVector::from_unnormalized(const VectorXd& raw) {
  if ((raw.array() < 0.0).any()) {
    throw ConfigError("weights must be nonnegative");
  }
  const double total = raw.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("degenerate weights");
  }
  return WeightVector(raw / total);
}

WeightVector WeightVector::from_log(const VectorXd& log_weights) {
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) {
    throw NumericalError("degenerate weights");
  }
  return from_unnormalized(
      (log_weights.array() - top).unaryExpr([](double v) { return std::exp(v); }).matrix());
}

EnsembleStatistics ensemble_statistics(const Ensemble& e) {
  VectorXd mean = e.members().rowwise().mean();
  MatrixXd anomalies = e.members().colwise() - mean;
  return {std::move(mean), std::move(anomalies)};
}

Ensemble apply_inflation(const Ensemble& e, double gamma) {
  if (!(gamma >= 1.0)) {
    throw ConfigError("inflation factor must be >= 1");
  }
  if (gamma == 1.0) {
    return e;
  }
  const auto stats = ensemble_statistics(e);
  MatrixXd inflated = (gamma * stats.anomalies).colwise() + stats.mean;
  return Ensemble(std::move(inflated));
}

MatrixXd rejuvenation_noise(const MatrixXd& anomalies, double tau, RngStream& rng,
                            RejuvenationScaling scaling) {
  if (tau < 0.0) {
    throw ConfigError("rejuvenation parameter must be >= 0");
  }
  const Index n = anomalies.cols();
  if (tau == 0.0) {
    return MatrixXd::Zero(anomalies.rows(), n);
  }
  const double denom = scaling == RejuvenationScaling::kSqrt
                           ? std::sqrt(static_cast<double>(n - 1))
                           : static_cast<double>(n - 1);
  const MatrixXd xi = rng.normal_matrix(n, n);
  return anomalies * xi * (tau / denom);
}

Ensemble apply_rejuvenation(const Ensemble& e, double tau, RngStream& rng,
                            RejuvenationScaling scaling) {
  if (tau == 0.0) {
    return e;
  }
  const auto stats = ensemble_statistics(e);
  return Ensemble(e.members() + rejuvenation_noise(stats.anomalies, tau, rng, scaling));
}

double effective_sample_size(const WeightVector& w) {
  const double s = w.values().squaredNorm();
  if (!(s > 0.0)) {
    throw NumericalError("degenerate weights");
  }
  return 1.0 / s;
}

Quartiles quartiles(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) {
    throw ConfigError("sample too small for quartiles");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto at = [&](int i) {
    const double pos = static_cast<double>(i) * static_cast<double>(n + 1) / 4.0;
    // 1-based position, clamped to the sample range.
    const double p = std::clamp(pos, 1.0, static_cast<double>(n));
    const auto lower = static_cast<std::size_t>(std::floor(p));
    const double frac = p - static_cast<double>(lower);
    if (frac == 0.0 || lower >= n) {
      return sorted[lower - 1];
    }
    return sorted[lower - 1] + frac * (sorted[lower] - sorted[lower - 1]);
  };
  return {at(1), at(2), at(3)};
}

Interval iqr_interval(std::span<const double> values, double factor) {
  if (factor < 0.0) {
    throw ConfigError("IQR factor must be >= 0");
  }
  const auto q = quartiles(values);
  const double width = q.q3 - q.q1;
  return {q.q1 - factor * width, q.q3 + factor * width};
}

double rmse(const std::vector<VectorXd>& estimates, const std::vector<VectorXd>& truth,
            std::size_t skip) {
  if (estimates.size() != truth.size()) {
    throw ConfigError("rmse: estimate and truth series differ in length");
  }
  if (skip >= estimates.size()) {
    throw ConfigError("rmse: skip must be smaller than the series length");
  }
  double sum = 0.0;
  for (std::size_t k = skip; k < estimates.size(); ++k) {
    if (estimates[k].size() != truth[k].size() || truth[k].size() == 0) {
      throw ConfigError("rmse: dimension mismatch");
    }
    sum += std::sqrt((estimates[k] - truth[k]).squaredNorm() / static_cast<double>(truth[k].size()));
  }
  return sum / static_cast<double>(estimates.size() - skip);
}

}  // namespace adatemp
