#include "adatemp/particle_filters.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "adatemp/error.hpp"

namespace adatemp {

void PfConfig::validate() const {
  if (!(tempering_exponent > 0.0 && tempering_exponent <= 1.0)) {
    throw ConfigError("particle filter tempering exponent must lie in (0, 1]");
  }
  if (!(rejuvenation >= 0.0)) {
    throw ConfigError("rejuvenation parameter must be >= 0");
  }
}

WeightVector weights_from_precision(const MatrixXd& observed, const VectorXd& y,
                                    const MatrixXd& precision, double alpha) {
  if (observed.rows() != y.size()) {
    throw ConfigError("observation vector has the wrong dimension");
  }
  const MatrixXd innov = observed.colwise() - y;
  const MatrixXd weighted = precision * innov;
  VectorXd logw(observed.cols());
  for (Index i = 0; i < observed.cols(); ++i) {
    const double q = innov.col(i).dot(weighted.col(i));
    logw(i) = std::isnan(q) ? -std::numeric_limits<double>::infinity() : -0.5 * alpha * q;
  }
  return WeightVector::from_log(logw);
}

WeightVector importance_weights(const Ensemble& e, const VectorXd& y,
                                const ObservationModel& obs, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("tempering exponent must lie in (0, 1]");
  }
  return weights_from_precision(obs.observe(e), y, obs.noise_precision(), alpha);
}

std::vector<Index> resample(const WeightVector& w, RngStream& rng, Resampler method) {
  const Index n = w.size();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  if (method == Resampler::kMultinomial) {
    std::discrete_distribution<Index> pick(w.values().data(), w.values().data() + n);
    for (auto& i : idx) i = pick(rng.engine());
    return idx;
  }
  const double step = 1.0 / static_cast<double>(n);
  const double u0 = rng.uniform() * step;
  double cumulative = w[0];
  Index i = 0;
  for (Index k = 0; k < n; ++k) {
    const double u = u0 + static_cast<double>(k) * step;
    while (u > cumulative && i < n - 1) {
      ++i;
      cumulative += w[i];
    }
    idx[static_cast<std::size_t>(k)] = i;
  }
  return idx;
}

MatrixXd squared_distances(const MatrixXd& members) {
  const Index n = members.cols();
  MatrixXd d(n, n);
  for (Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Index i = j + 1; i < n; ++i) {
      d(i, j) = d(j, i) = (members.col(i) - members.col(j)).squaredNorm();
    }
  }
  return d;
}

Ensemble bootstrap_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                          const PfConfig& cfg, RngStream& rng) {
  cfg.validate();
  const WeightVector w = importance_weights(e, y, obs, cfg.tempering_exponent);
  const auto idx = resample(w, rng, cfg.resampler);
  MatrixXd za(e.dim(), e.size());
  for (Index j = 0; j < e.size(); ++j) {
    za.col(j) = e.member(idx[static_cast<std::size_t>(j)]);
  }
  const auto stats = ensemble_statistics(e);
  za += rejuvenation_noise(stats.anomalies, cfg.rejuvenation, rng, cfg.scaling);
  return Ensemble(std::move(za));
}

Ensemble etpf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                     const PfConfig& cfg, RngStream& rng) {
  cfg.validate();
  const Index n = e.size();
  const WeightVector w = importance_weights(e, y, obs, cfg.tempering_exponent);
  const VectorXd cols = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const auto coupling =
      solve_ot(squared_distances(e.members()), w.values(), cols, cfg.ot_solver, cfg.sinkhorn);
  MatrixXd za = e.members() * (static_cast<double>(n) * coupling.transport);
  const auto stats = ensemble_statistics(e);
  za += rejuvenation_noise(stats.anomalies, cfg.rejuvenation, rng, cfg.scaling);
  return Ensemble(std::move(za));
}

std::vector<LocalCoupling> letpf_couplings(const Ensemble& e, const VectorXd& y,
                                           const ObservationModel& obs, const PfConfig& cfg) {
  cfg.validate();
  if (!cfg.localization) {
    throw ConfigError("letpf_update requires a localization configuration");
  }
  const auto& loc = *cfg.localization;
  loc.validate(e.dim(), obs.obs_dim());
  const Index n = e.size();
  const MatrixXd observed = obs.observe(e);
  if (observed.rows() != y.size()) {
    throw ConfigError("observation vector has the wrong dimension");
  }
  const VectorXd cols = VectorXd::Constant(n, 1.0 / static_cast<double>(n));

  std::map<double, std::vector<Index>> groups;
  for (Index g = 0; g < e.dim(); ++g) {
    groups[loc.state_positions[static_cast<std::size_t>(g)]].push_back(g);
  }
  std::vector<LocalCoupling> out;
  out.reserve(groups.size());
  for (const auto& [x_g, components] : groups) {
    const VectorXd c = localization_weights(loc, x_g);
    std::vector<Index> active;
    for (Index l = 0; l < c.size(); ++l) {
      if (c(l) > 0.0) active.push_back(l);
    }
    if (active.empty()) {
      out.push_back({x_g, components, WeightVector::uniform(n),
                     CouplingMatrix{MatrixXd::Identity(n, n) / static_cast<double>(n), 0.0}});
      continue;
    }
    const auto m = static_cast<Index>(active.size());
    MatrixXd hz(m, n);
    VectorXd ya(m);
    MatrixXd prec(m, m);
    for (Index a = 0; a < m; ++a) {
      hz.row(a) = observed.row(active[a]);
      ya(a) = y(active[a]);
      for (Index b = 0; b < m; ++b) {
        prec(a, b) = std::sqrt(c(active[a]) * c(active[b])) *
                     obs.noise_precision()(active[a], active[b]);
      }
    }
    WeightVector w = weights_from_precision(hz, ya, prec, cfg.tempering_exponent);

    const VectorXd rho = state_localization_weights(loc, x_g);
    MatrixXd cost = MatrixXd::Zero(n, n);
    for (Index k = 0; k < e.dim(); ++k) {
      if (rho(k) <= 0.0) continue;
      const auto row = e.members().row(k);
      for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
          const double diff = row(i) - row(j);
          cost(i, j) += rho(k) * diff * diff;
        }
      }
    }
    cost = cost.selfadjointView<Eigen::Lower>();
    auto coupling = solve_ot(cost, w.values(), cols, cfg.ot_solver, cfg.sinkhorn);
    out.push_back({x_g, components, std::move(w), std::move(coupling)});
  }
  return out;
}

Ensemble letpf_update(const Ensemble& e, const VectorXd& y, const ObservationModel& obs,
                      const PfConfig& cfg, RngStream& rng) {
  const auto couplings = letpf_couplings(e, y, obs, cfg);
  const Index n = e.size();
  const auto stats = ensemble_statistics(e);
  MatrixXd za = e.members();
  for (const auto& local : couplings) {
    const MatrixXd t = static_cast<double>(n) * local.coupling.transport;
    for (Index g : local.components) {
      za.row(g) = e.members().row(g) * t;
    }
    if (!cfg.global_rejuvenation && cfg.rejuvenation > 0.0) {
      MatrixXd local_anomalies(static_cast<Index>(local.components.size()), n);
      for (std::size_t k = 0; k < local.components.size(); ++k) {
        local_anomalies.row(static_cast<Index>(k)) = stats.anomalies.row(local.components[k]);
      }
      const MatrixXd noise =
          rejuvenation_noise(local_anomalies, cfg.rejuvenation, rng, cfg.scaling);
      for (std::size_t k = 0; k < local.components.size(); ++k) {
        za.row(local.components[k]) += noise.row(static_cast<Index>(k));
      }
    }
  }
  if (cfg.global_rejuvenation) {
    za += rejuvenation_noise(stats.anomalies, cfg.rejuvenation, rng, cfg.scaling);
  }
  return Ensemble(std::move(za));
}

}  // namespace adatemp
