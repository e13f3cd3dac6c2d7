#include "adatemp/models.hpp"

#include <cmath>
#include <set>

#include "adatemp/error.hpp"

namespace adatemp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

VectorXd lorenz63_rhs(const Lorenz63& m, const VectorXd& s) {
  VectorXd out(3);
  out(0) = m.sigma * (s(1) - s(0));
  out(1) = s(0) * (m.rho - s(2)) - s(1);
  out(2) = s(0) * s(1) - m.beta * s(2);
  return out;
}

VectorXd lorenz96_rhs(const Lorenz96& m, const VectorXd& s) {
  const Index n = s.size();
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    const double next = s((i + 1) % n);
    const double prev = s((i + n - 1) % n);
    const double prev2 = s((i + n - 2) % n);
    out(i) = (next - prev2) * prev - s(i) + m.forcing;
  }
  return out;
}

double force_sign(DriftSign sign) { return sign == DriftSign::kAttracting ? -1.0 : 1.0; }

std::size_t step_count(double duration, double dt) {
  if (duration < 0.0) {
    throw ConfigError("duration must be >= 0");
  }
  const double steps = std::round(duration / dt);
  if (std::abs(steps * dt - duration) > 1e-9 * std::max(1.0, duration)) {
    throw ConfigError("incommensurate step: duration is not a multiple of internal_dt");
  }
  return static_cast<std::size_t>(steps);
}

}  // namespace

Index DynamicalModel::dimension() const {
  return std::visit(Overloaded{[](const Lorenz63&) -> Index { return 3; },
                               [](const Lorenz96& m) -> Index { return m.grid_size; },
                               [](const LangevinDoubleWell&) -> Index { return 2; }},
                    system);
}

VectorXd rhs(const DynamicalModel& model, const VectorXd& state) {
  if (state.size() != model.dimension()) {
    throw ConfigError("rhs: state dimension does not match the model");
  }
  return std::visit(
      Overloaded{[&](const Lorenz63& m) { return lorenz63_rhs(m, state); },
                 [&](const Lorenz96& m) { return lorenz96_rhs(m, state); },
                 [&](const LangevinDoubleWell& m) {
                   VectorXd out(2);
                   out(0) = state(1) / m.mass;
                   out(1) = force_sign(m.drift) * double_well_gradient(state(0)) -
                            m.friction * state(1);
                   return out;
                 }},
      model.system);
}

VectorXd integrate(const DynamicalModel& model, const VectorXd& state, double duration) {
  if (model.stochastic()) {
    throw ConfigError("integrate: RK4 applies to deterministic models only");
  }
  if (!(model.internal_dt > 0.0)) {
    throw ConfigError("internal_dt must be positive");
  }
  const std::size_t steps = step_count(duration, model.internal_dt);
  const double h = model.internal_dt;
  VectorXd s = state;
  for (std::size_t k = 0; k < steps; ++k) {
    const VectorXd k1 = rhs(model, s);
    const VectorXd k2 = rhs(model, s + 0.5 * h * k1);
    const VectorXd k3 = rhs(model, s + 0.5 * h * k2);
    const VectorXd k4 = rhs(model, s + h * k3);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

double double_well_potential(double q) {
  const double a = q - 5.0;
  const double b = q + 5.0;
  return a * a * b * b;
}

double double_well_gradient(double q) { return 4.0 * q * (q * q - 25.0); }

PhaseState baoab_step(const VectorXd& q0, const VectorXd& p0, const GradientFn& grad,
                      const LangevinDoubleWell& params, double dt, RngStream& rng) {
  const double sign = force_sign(params.drift);
  VectorXd q = q0;
  VectorXd p = p0;
  p += (0.5 * dt * sign) * grad(q);
  q += (0.5 * dt / params.mass) * p;
  if (params.friction != 0.0 || params.noise != 0.0) {
    const double decay = std::exp(-params.friction * std::abs(dt));
    double variance = 0.0;
    if (params.friction > 0.0) {
      variance = params.noise * params.noise * params.mass * (1.0 - decay * decay) /
                 (2.0 * params.friction);
    } else {
      variance = params.noise * params.noise * params.mass * std::abs(dt);
    }
    p *= decay;
    if (variance > 0.0) {
      const double amp = std::sqrt(variance);
      for (Index i = 0; i < p.size(); ++i) {
        p(i) += amp * rng.normal();
      }
    }
  }
  q += (0.5 * dt / params.mass) * p;
  p += (0.5 * dt * sign) * grad(q);
  return {std::move(q), std::move(p)};
}

PhaseState baoab_step(const VectorXd& q, const VectorXd& p, const DynamicalModel& model,
                      double dt, RngStream& rng) {
  const auto* params = std::get_if<LangevinDoubleWell>(&model.system);
  if (params == nullptr) {
    throw ConfigError("baoab_step requires the Langevin double-well model");
  }
  static const GradientFn kGrad = [](const VectorXd& x) {
    return x.unaryExpr([](double v) { return double_well_gradient(v); }).eval();
  };
  return baoab_step(q, p, kGrad, *params, dt, rng);
}

VectorXd propagate(const DynamicalModel& model, const VectorXd& state, double duration,
                   RngStream& rng) {
  if (!model.stochastic()) {
    return integrate(model, state, duration);
  }
  if (state.size() != 2) {
    throw ConfigError("Langevin state must be (q, p)");
  }
  const std::size_t steps = step_count(duration, model.internal_dt);
  const auto& params = std::get<LangevinDoubleWell>(model.system);
  const double sign = force_sign(params.drift);
  const double dt = model.internal_dt;
  const double decay = std::exp(-params.friction * dt);
  const double amp =
      params.friction > 0.0
          ? std::sqrt(params.noise * params.noise * params.mass * (1.0 - decay * decay) /
                      (2.0 * params.friction))
          : params.noise * std::sqrt(params.mass * dt);
  // Scalar fast path of baoab_step; draws one normal per step exactly like it.
  double q = state(0);
  double p = state(1);
  for (std::size_t k = 0; k < steps; ++k) {
    p += 0.5 * dt * sign * double_well_gradient(q);
    q += 0.5 * dt / params.mass * p;
    p *= decay;
    if (amp > 0.0) {
      p += amp * rng.normal();
    }
    q += 0.5 * dt / params.mass * p;
    p += 0.5 * dt * sign * double_well_gradient(q);
  }
  VectorXd out(2);
  out << q, p;
  return out;
}

Propagator make_propagator(const DynamicalModel& model, double duration) {
  return [model, duration](const VectorXd& s, RngStream& rng) {
    return propagate(model, s, duration, rng);
  };
}

ObservationModel ObservationModel::selection(std::vector<Index> indices,
                                             MatrixXd noise_covariance, Index state_dim,
                                             std::optional<VectorXd> offset) {
  std::set<Index> seen;
  for (Index i : indices) {
    if (i < 0 || i >= state_dim) {
      throw ConfigError("observation index out of range");
    }
    if (!seen.insert(i).second) {
      throw ConfigError("observation indices must be distinct");
    }
  }
  if (noise_covariance.rows() != static_cast<Index>(indices.size())) {
    throw ConfigError("noise covariance size does not match the observed components");
  }
  if (offset && offset->size() != static_cast<Index>(indices.size())) {
    throw ConfigError("observation offset size mismatch");
  }
  ObservationModel obs;
  obs.indices_ = std::move(indices);
  obs.offset_ = std::move(offset);
  obs.set_noise(std::move(noise_covariance));
  return obs;
}

ObservationModel ObservationModel::function(std::function<VectorXd(const VectorXd&)> map,
                                            Index obs_dim, MatrixXd noise_covariance) {
  if (noise_covariance.rows() != obs_dim) {
    throw ConfigError("noise covariance size does not match obs_dim");
  }
  ObservationModel obs;
  obs.map_ = std::move(map);
  obs.set_noise(std::move(noise_covariance));
  return obs;
}

void ObservationModel::set_noise(MatrixXd noise_covariance) {
  if (noise_covariance.rows() != noise_covariance.cols() || noise_covariance.rows() == 0) {
    throw ConfigError("noise covariance must be square and non-empty");
  }
  if (!noise_covariance.isApprox(noise_covariance.transpose(), 1e-12)) {
    throw ConfigError("noise covariance must be symmetric");
  }
  Eigen::LLT<MatrixXd> llt(noise_covariance);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("noise covariance must be positive definite");
  }
  const Index n = noise_covariance.rows();
  cholesky_ = llt.matrixL();
  precision_ = llt.solve(MatrixXd::Identity(n, n));
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
  diagonal_ = noise_covariance.isDiagonal(0.0);
  noise_covariance_ = std::move(noise_covariance);
}

VectorXd ObservationModel::observe(const VectorXd& state) const {
  if (map_) {
    VectorXd y = map_(state);
    if (y.size() != obs_dim()) {
      throw ConfigError("observation map returned the wrong dimension");
    }
    return y;
  }
  VectorXd y(static_cast<Index>(indices_.size()));
  for (std::size_t l = 0; l < indices_.size(); ++l) {
    if (indices_[l] >= state.size()) {
      throw ConfigError("observation index exceeds state dimension");
    }
    y(static_cast<Index>(l)) = state(indices_[l]);
  }
  if (offset_) {
    y += *offset_;
  }
  return y;
}

MatrixXd ObservationModel::observe(const Ensemble& e) const {
  MatrixXd out(obs_dim(), e.size());
  for (Index i = 0; i < e.size(); ++i) {
    out.col(i) = observe(VectorXd(e.member(i)));
  }
  return out;
}

double ObservationModel::mahalanobis(const VectorXd& innovation) const {
  if (diagonal_) {
    return (innovation.array().square() * precision_.diagonal().array()).sum();
  }
  return innovation.dot(precision_ * innovation);
}

TwinRun generate_twin(const Propagator& propagate_one, const ObservationModel& obs,
                      const VectorXd& initial_truth, std::size_t cycles, double obs_interval,
                      RngStream& model_rng, RngStream& obs_rng, NoiseMode noise) {
  TwinRun run;
  run.initial_truth = initial_truth;
  run.obs_interval = obs_interval;
  run.cycles = cycles;
  run.truth.reserve(cycles);
  run.observations.reserve(cycles);
  VectorXd state = initial_truth;
  for (std::size_t k = 0; k < cycles; ++k) {
    state = propagate_one(state, model_rng);
    VectorXd y = obs.observe(state);
    if (noise == NoiseMode::kGaussian) {
      y += obs.noise_cholesky() * obs_rng.normal_vector(obs.obs_dim());
    }
    run.truth.push_back(state);
    run.observations.push_back(std::move(y));
  }
  return run;
}

TwinRun generate_twin(const DynamicalModel& model, const ObservationModel& obs,
                      const VectorXd& initial_truth, std::size_t cycles, double obs_interval,
                      RngStream& rng, NoiseMode noise) {
  return generate_twin(make_propagator(model, obs_interval), obs, initial_truth, cycles,
                       obs_interval, rng, rng, noise);
}

}  // namespace adatemp
