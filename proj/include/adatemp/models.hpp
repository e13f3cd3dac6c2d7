#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "adatemp/ensemble.hpp"
#include "adatemp/rng.hpp"

namespace adatemp {

struct Lorenz63 {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

struct Lorenz96 {
  Index grid_size = 120;
  double forcing = 8.0;
};

/// Sign of the potential force in the momentum equation.
enum class DriftSign {
  kAttracting,  // dp = -grad(phi) dt ..., wells at +-5 are stable
  kRepelling,   // dp = +grad(phi) dt ..., as literally printed in the source
};

/// Damped Langevin dynamics in the double-well potential (z - 5)^2 (z + 5)^2.
/// State layout: (q, p).
struct LangevinDoubleWell {
  double mass = 1.0;
  double friction = 10.0;
  double noise = 70.71067811865476;  // sqrt(5000)
  DriftSign drift = DriftSign::kAttracting;
};

struct DynamicalModel {
  std::variant<Lorenz63, Lorenz96, LangevinDoubleWell> system;
  double internal_dt = 0.01;

  Index dimension() const;
  bool stochastic() const { return std::holds_alternative<LangevinDoubleWell>(system); }
};

/// One-step propagator of a single state over a fixed duration.
using Propagator = std::function<VectorXd(const VectorXd&, RngStream&)>;

/// Time derivative. For the Langevin model this is the deterministic drift
/// (M^-1 p, -+grad(phi) - gamma p).
VectorXd rhs(const DynamicalModel& model, const VectorXd& state);

/// Classical RK4 with `internal_dt` substeps; duration must be a multiple of
/// internal_dt. Deterministic models only.
VectorXd integrate(const DynamicalModel& model, const VectorXd& state, double duration);

double double_well_potential(double q);
double double_well_gradient(double q);

/// Componentwise potential gradient used by the BAOAB kick.
using GradientFn = std::function<VectorXd(const VectorXd&)>;

struct PhaseState {
  VectorXd q;
  VectorXd p;
};

/// One BAOAB step: half kick, half drift, exact Ornstein-Uhlenbeck momentum
/// update, half drift, half kick.
PhaseState baoab_step(const VectorXd& q, const VectorXd& p, const GradientFn& grad,
                      const LangevinDoubleWell& params, double dt, RngStream& rng);

/// BAOAB step with the double-well force and the configured drift sign.
PhaseState baoab_step(const VectorXd& q, const VectorXd& p, const DynamicalModel& model,
                      double dt, RngStream& rng);

/// Advances a state by `duration`: RK4 for deterministic models, BAOAB for
/// the Langevin model.
VectorXd propagate(const DynamicalModel& model, const VectorXd& state, double duration,
                   RngStream& rng);

Propagator make_propagator(const DynamicalModel& model, double duration);

/// Observation operator y = H(z) + eta, eta ~ N(0, R).
class ObservationModel {
 public:
  /// Linear selection of the given state components, optionally shifted by
  /// a constant offset (e.g. orography for total-height gauges).
  static ObservationModel selection(std::vector<Index> indices, MatrixXd noise_covariance,
                                    Index state_dim,
                                    std::optional<VectorXd> offset = std::nullopt);
  static ObservationModel function(std::function<VectorXd(const VectorXd&)> map,
                                   Index obs_dim, MatrixXd noise_covariance);

  Index obs_dim() const { return noise_covariance_.rows(); }
  bool is_selection() const { return !map_; }
  const std::vector<Index>& indices() const { return indices_; }

  const MatrixXd& noise_covariance() const { return noise_covariance_; }
  const MatrixXd& noise_precision() const { return precision_; }
  const MatrixXd& noise_cholesky() const { return cholesky_; }
  bool diagonal_noise() const { return diagonal_; }

  VectorXd observe(const VectorXd& state) const;
  /// N_y x N_ens matrix of observed members.
  MatrixXd observe(const Ensemble& e) const;

  /// innovation^T R^-1 innovation.
  double mahalanobis(const VectorXd& innovation) const;

 private:
  ObservationModel() = default;
  void set_noise(MatrixXd noise_covariance);

  std::vector<Index> indices_;
  std::optional<VectorXd> offset_;
  std::function<VectorXd(const VectorXd&)> map_;
  MatrixXd noise_covariance_;
  MatrixXd precision_;
  MatrixXd cholesky_;
  bool diagonal_ = true;
};

/// Equivalent of observe() without noise.
inline VectorXd observe(const ObservationModel& obs, const VectorXd& state) {
  return obs.observe(state);
}

enum class NoiseMode { kGaussian, kNoiseless };

struct TwinRun {
  VectorXd initial_truth;
  std::vector<VectorXd> truth;         // truth[k] at cycle k + 1
  std::vector<VectorXd> observations;  // observations[k] of truth[k]
  double obs_interval = 0.0;
  std::size_t cycles = 0;
};

/// Propagates the truth cycle by cycle and draws y_k = H(z_k) + chol(R) xi.
TwinRun generate_twin(const Propagator& propagate_one, const ObservationModel& obs,
                      const VectorXd& initial_truth, std::size_t cycles, double obs_interval,
                      RngStream& model_rng, RngStream& obs_rng,
                      NoiseMode noise = NoiseMode::kGaussian);

TwinRun generate_twin(const DynamicalModel& model, const ObservationModel& obs,
                      const VectorXd& initial_truth, std::size_t cycles, double obs_interval,
                      RngStream& rng, NoiseMode noise = NoiseMode::kGaussian);

}  // namespace adatemp
