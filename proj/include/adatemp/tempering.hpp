#pragma once

#include <string>
#include <vector>

#include "adatemp/ensemble.hpp"
#include "adatemp/fpf.hpp"
#include "adatemp/gaussian_filters.hpp"
#include "adatemp/models.hpp"
#include "adatemp/particle_filters.hpp"
#include "adatemp/rng.hpp"

namespace adatemp {

enum class FilterKind { kEsrf, kLesrf, kBootstrap, kEtpf, kLetpf, kFpf };

bool is_particle_type(FilterKind kind);
std::string to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& name);

/// Add-on parameters of every filter family; the exponent passed to
/// apply_filter overrides the stored tempering exponents.
struct FilterSettings {
  EsrfConfig esrf;
  PfConfig pf;
  FpfConfig fpf;
};

Ensemble apply_filter(FilterKind kind, const Ensemble& e, const VectorXd& y,
                      const ObservationModel& obs, const FilterSettings& settings,
                      double exponent, RngStream& rng);

enum class Criterion { kAlways, kEss, kIqr };
enum class StageOrder { kParticleFirst, kGaussianFirst };

std::string to_string(Criterion c);

struct TemperingPolicy {
  Criterion criterion = Criterion::kAlways;
  double theta = 0.5;
  double iqr_factor = 1.5;
  double alpha_tempered = 0.2;
  FilterKind particle_filter = FilterKind::kEtpf;
  FilterKind gaussian_filter = FilterKind::kEsrf;
  StageOrder order = StageOrder::kParticleFirst;

  void validate() const;
};

struct AlphaDecision {
  double alpha = 1.0;
  bool fired = false;
  /// ESS of the untempered weights; 1 when they are degenerate.
  double ess = 0.0;
  /// Per observed component, IQR interval of H(z_i) (IQR criterion only).
  std::vector<Interval> intervals;
};

AlphaDecision decide_alpha(const TemperingPolicy& policy, const Ensemble& e,
                           const VectorXd& y, const ObservationModel& obs);

struct AssimilationOutcome {
  Ensemble analysis;
  double alpha_used;
  bool criterion_fired;
  double ess;
  std::vector<Interval> intervals;
};

/// alpha = 1: particle filter alone. Otherwise particle filter with alpha and
/// Gaussian filter with 1 - alpha in the configured order.
AssimilationOutcome hybrid_step(const Ensemble& e, const VectorXd& y,
                                const ObservationModel& obs, const TemperingPolicy& policy,
                                const FilterSettings& settings, RngStream& rng);

}  // namespace adatemp
