#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace adatemp {

enum class Taper {
  kHat,          // max(0, 1 - s)
  kGaspariCohn,  // fifth-order piecewise rational, support s < 2
};

/// R-localization geometry: positions of state components and observations
/// on a common axis, plus an optional period for ring domains.
struct LocalizationConfig {
  double radius = 2.0;
  Taper taper = Taper::kHat;
  std::vector<double> state_positions;
  std::vector<double> obs_positions;
  std::optional<double> period;

  void validate(Eigen::Index state_dim, Eigen::Index obs_dim) const;
  double distance(double a, double b) const;
};

double taper_weight(Taper taper, double s);

/// Diagonal of C_g: taper(|x_g - x_l| / r_loc) for every observation l.
Eigen::VectorXd localization_weights(const LocalizationConfig& cfg, double x_g);

/// Taper weights of every state component relative to x_g.
Eigen::VectorXd state_localization_weights(const LocalizationConfig& cfg, double x_g);

}  // namespace adatemp
