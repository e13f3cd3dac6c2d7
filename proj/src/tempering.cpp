#include "adatemp/tempering.hpp"

#include <cctype>

#include "adatemp/error.hpp"

namespace adatemp {

bool is_particle_type(FilterKind kind) {
  return kind != FilterKind::kEsrf && kind != FilterKind::kLesrf;
}

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::kEsrf:
      return "ESRF";
    case FilterKind::kLesrf:
      return "LESRF";
    case FilterKind::kBootstrap:
      return "Bootstrap";
    case FilterKind::kEtpf:
      return "ETPF";
    case FilterKind::kLetpf:
      return "LETPF";
    case FilterKind::kFpf:
      return "FPF";
  }
  return "?";
}

FilterKind parse_filter_kind(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "esrf") return FilterKind::kEsrf;
  if (lower == "lesrf") return FilterKind::kLesrf;
  if (lower == "bootstrap" || lower == "pf") return FilterKind::kBootstrap;
  if (lower == "etpf") return FilterKind::kEtpf;
  if (lower == "letpf") return FilterKind::kLetpf;
  if (lower == "fpf") return FilterKind::kFpf;
  throw ConfigError("unknown filter '" + name + "'");
}

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::kAlways:
      return "always";
    case Criterion::kEss:
      return "ESS";
    case Criterion::kIqr:
      return "IQR";
  }
  return "?";
}

Ensemble apply_filter(FilterKind kind, const Ensemble& e, const VectorXd& y,
                      const ObservationModel& obs, const FilterSettings& settings,
                      double exponent, RngStream& rng) {
  switch (kind) {
    case FilterKind::kEsrf:
    case FilterKind::kLesrf: {
      EsrfConfig cfg = settings.esrf;
      cfg.tempering_exponent = exponent;
      return kind == FilterKind::kEsrf ? esrf_update(e, y, obs, cfg)
                                       : lesrf_update(e, y, obs, cfg);
    }
    case FilterKind::kBootstrap:
    case FilterKind::kEtpf:
    case FilterKind::kLetpf: {
      PfConfig cfg = settings.pf;
      cfg.tempering_exponent = exponent;
      if (kind == FilterKind::kBootstrap) return bootstrap_update(e, y, obs, cfg, rng);
      if (kind == FilterKind::kEtpf) return etpf_update(e, y, obs, cfg, rng);
      return letpf_update(e, y, obs, cfg, rng);
    }
    case FilterKind::kFpf: {
      FpfConfig cfg = settings.fpf;
      cfg.tempering_exponent = exponent;
      return fpf_update(e, y, obs, cfg, rng);
    }
  }
  throw ConfigError("unknown filter kind");
}

void TemperingPolicy::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ConfigError("ESS threshold theta must lie in (0, 1)");
  }
  if (iqr_factor != 0.0 && iqr_factor != 1.5) {
    throw ConfigError("IQR factor must be 0 or 1.5");
  }
  if (!(alpha_tempered > 0.0 && alpha_tempered <= 1.0)) {
    throw ConfigError("tempered alpha must lie in (0, 1]");
  }
  if (!is_particle_type(particle_filter)) {
    throw ConfigError("hybrid particle stage must be a particle-type filter");
  }
  if (is_particle_type(gaussian_filter)) {
    throw ConfigError("hybrid Gaussian stage must be ESRF or LESRF");
  }
}

AlphaDecision decide_alpha(const TemperingPolicy& policy, const Ensemble& e,
                           const VectorXd& y, const ObservationModel& obs) {
  policy.validate();
  AlphaDecision out;
  const MatrixXd observed = obs.observe(e);
  try {
    out.ess = effective_sample_size(
        weights_from_precision(observed, y, obs.noise_precision(), 1.0));
  } catch (const NumericalError&) {
    out.ess = 1.0;
  }
  switch (policy.criterion) {
    case Criterion::kAlways:
      out.fired = true;
      break;
    case Criterion::kEss:
      out.fired = out.ess < policy.theta * static_cast<double>(e.size());
      break;
    case Criterion::kIqr: {
      for (Index j = 0; j < observed.rows(); ++j) {
        const VectorXd row = observed.row(j).transpose();
        const Interval iv =
            iqr_interval(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                         policy.iqr_factor);
        out.intervals.push_back(iv);
        if (!iv.contains(y(j))) out.fired = true;
      }
      break;
    }
  }
  out.alpha = out.fired ? policy.alpha_tempered : 1.0;
  return out;
}

AssimilationOutcome hybrid_step(const Ensemble& e, const VectorXd& y,
                                const ObservationModel& obs, const TemperingPolicy& policy,
                                const FilterSettings& settings, RngStream& rng) {
  auto decision = decide_alpha(policy, e, y, obs);
  const double alpha = decision.alpha;
  auto finish = [&](Ensemble analysis) {
    return AssimilationOutcome{std::move(analysis), alpha, decision.fired, decision.ess,
                               std::move(decision.intervals)};
  };
  if (alpha == 1.0) {
    return finish(apply_filter(policy.particle_filter, e, y, obs, settings, 1.0, rng));
  }
  if (policy.order == StageOrder::kParticleFirst) {
    Ensemble mid = apply_filter(policy.particle_filter, e, y, obs, settings, alpha, rng);
    return finish(apply_filter(policy.gaussian_filter, mid, y, obs, settings, 1.0 - alpha, rng));
  }
  Ensemble mid = apply_filter(policy.gaussian_filter, e, y, obs, settings, 1.0 - alpha, rng);
  return finish(apply_filter(policy.particle_filter, mid, y, obs, settings, alpha, rng));
}

}  // namespace adatemp
