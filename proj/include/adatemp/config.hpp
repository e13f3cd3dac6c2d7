#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "adatemp/localization.hpp"
#include "adatemp/tempering.hpp"

namespace adatemp {

enum class ExperimentKind { kLangevin, kLorenz63, kLorenz96, kShallowWater };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

/// A single filter ("ETPF") or a tempered hybrid ("IQR-ETPF-LESRF"; a hybrid
/// without criterion prefix tempers every cycle).
struct FilterSpec {
  FilterKind primary = FilterKind::kEsrf;
  std::optional<FilterKind> gaussian;
  Criterion criterion = Criterion::kAlways;

  bool hybrid() const { return gaussian.has_value(); }
  /// Canonical row name, e.g. "ESS-Bootstrap-ESRF".
  std::string name() const;
  /// Name without the criterion prefix.
  std::string combination() const;
  bool operator==(const FilterSpec&) const = default;
};

FilterSpec parse_filter_spec(const std::string& text);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kLorenz63;
  FilterSpec filter;
  Index n_ens = 25;
  std::size_t cycles = 50000;
  std::size_t skip = 500;
  std::uint64_t seed = 1;

  double inflation = 1.05;
  double rejuvenation = 0.2;
  RejuvenationScaling rejuvenation_scaling = RejuvenationScaling::kSqrt;
  double r_loc = 2.0;
  Taper taper = Taper::kHat;
  double alpha_tempered = 0.2;
  double theta = 0.5;
  double iqr_factor = 1.5;
  StageOrder order = StageOrder::kParticleFirst;
  Resampler resampler = Resampler::kMultinomial;
  OtSolver ot_solver = OtSolver::kExact;
  double fpf_epsilon = 0.01;
  GainSolver fpf_solver = GainSolver::kDirect;
  int fpf_iterations = 10000;
  bool global_rejuvenation = false;
  NoiseMode noise = NoiseMode::kGaussian;
  DriftSign drift = DriftSign::kAttracting;
  /// Observe every state component instead of the experiment's gauges.
  bool observe_all = false;
  /// Overrides the observation error variance when > 0.
  double obs_variance = 0.0;
  /// Model time integrated from a perturbed fixed point before cycle 0 (Lorenz models).
  double spinup = 1000.0;
  std::string output_dir = ".";

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Experiment defaults: ensemble size, cycle count and burn-in per setup.
ExperimentConfig default_config(ExperimentKind kind);

/// Parses the key=value format: whitespace-separated tokens, '#' comments,
/// optional [section] headers. `experiment` must be present; every other key
/// falls back to the experiment defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Writes every key explicitly; parse_config(serialize(c)) == c.
std::string serialize(const ExperimentConfig& cfg);

}  // namespace adatemp
