#include "adatemp/localization.hpp"

#include <cmath>

#include "adatemp/error.hpp"

namespace adatemp {

void LocalizationConfig::validate(Eigen::Index state_dim, Eigen::Index obs_dim) const {
  if (!(radius > 0.0)) {
    throw ConfigError("localization radius must be positive");
  }
  if (static_cast<Eigen::Index>(state_positions.size()) != state_dim) {
    throw ConfigError("localization: one position per state component required");
  }
  if (static_cast<Eigen::Index>(obs_positions.size()) != obs_dim) {
    throw ConfigError("localization: one position per observation required");
  }
  if (period && !(*period > 0.0)) {
    throw ConfigError("localization period must be positive");
  }
}

double LocalizationConfig::distance(double a, double b) const {
  double d = std::abs(a - b);
  if (period) {
    d = std::fmod(d, *period);
    d = std::min(d, *period - d);
  }
  return d;
}

double taper_weight(Taper taper, double s) {
  s = std::abs(s);
  switch (taper) {
    case Taper::kHat:
      return std::max(0.0, 1.0 - s);
    case Taper::kGaspariCohn: {
      if (s >= 2.0) return 0.0;
      const double s2 = s * s;
      const double s3 = s2 * s;
      const double s4 = s3 * s;
      const double s5 = s4 * s;
      if (s <= 1.0) {
        return -0.25 * s5 + 0.5 * s4 + 0.625 * s3 - 5.0 / 3.0 * s2 + 1.0;
      }
      return s5 / 12.0 - 0.5 * s4 + 0.625 * s3 + 5.0 / 3.0 * s2 - 5.0 * s + 4.0 -
             2.0 / (3.0 * s);
    }
  }
  return 0.0;
}

Eigen::VectorXd localization_weights(const LocalizationConfig& cfg, double x_g) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(cfg.obs_positions.size()));
  for (std::size_t l = 0; l < cfg.obs_positions.size(); ++l) {
    c(static_cast<Eigen::Index>(l)) =
        taper_weight(cfg.taper, cfg.distance(x_g, cfg.obs_positions[l]) / cfg.radius);
  }
  return c;
}

Eigen::VectorXd state_localization_weights(const LocalizationConfig& cfg, double x_g) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(cfg.state_positions.size()));
  for (std::size_t l = 0; l < cfg.state_positions.size(); ++l) {
    c(static_cast<Eigen::Index>(l)) =
        taper_weight(cfg.taper, cfg.distance(x_g, cfg.state_positions[l]) / cfg.radius);
  }
  return c;
}

}  // namespace adatemp
