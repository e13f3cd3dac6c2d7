#include <doctest.h>

#include <cmath>
#include <vector>

#include "adatemp/error.hpp"
#include "adatemp/models.hpp"

using namespace adatemp;

namespace {

DynamicalModel l63() { return DynamicalModel{Lorenz63{}, 0.01}; }

DynamicalModel l96(Index n) { return DynamicalModel{Lorenz96{n, 8.0}, 0.01}; }

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("Lorenz 63 right-hand side") {
  CHECK(rhs(l63(), VectorXd::Zero(3)).norm() == 0.0);
  const VectorXd d = rhs(l63(), vec({1.0, 2.0, 3.0}));
  CHECK(d(0) == doctest::Approx(10.0));
  CHECK(d(1) == doctest::Approx(1.0 * (28.0 - 3.0) - 2.0));
  CHECK(d(2) == doctest::Approx(2.0 - 8.0));
  CHECK_THROWS_AS(rhs(l63(), VectorXd::Zero(4)), ConfigError);
}

TEST_CASE("Lorenz 96 right-hand side") {
  CHECK(rhs(l96(40), VectorXd::Constant(40, 8.0)).norm() == 0.0);
  const VectorXd d = rhs(l96(5), vec({1, 2, 3, 4, 5}));
  CHECK(d(0) == doctest::Approx(-3.0));
}

TEST_CASE("Lorenz 96 cyclic symmetry") {
  RngStream rng(3, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd x = rng.normal_vector(12) * 3.0;
    VectorXd rotated(12);
    for (Index i = 0; i < 12; ++i) rotated((i + 1) % 12) = x(i);
    const VectorXd a = rhs(l96(12), x);
    const VectorXd b = rhs(l96(12), rotated);
    for (Index i = 0; i < 12; ++i) CHECK(b((i + 1) % 12) == a(i));
  }
}

TEST_CASE("RK4 integration basics") {
  const VectorXd x = vec({1.0, 1.0, 1.0});
  CHECK(integrate(l63(), x, 0.0) == x);
  CHECK(integrate(l63(), VectorXd::Zero(3), 1.0).norm() == 0.0);
  CHECK_THROWS_WITH_AS(integrate(l63(), x, 0.125), doctest::Contains("incommensurate step"),
                       ConfigError);
  CHECK(integrate(l63(), x, 0.12).allFinite());
}

TEST_CASE("RK4 convergence order by step halving") {
  const VectorXd x = vec({1.0, 1.0, 1.0});
  auto run = [&](double dt) {
    DynamicalModel m = l63();
    m.internal_dt = dt;
    return integrate(m, x, 0.12);
  };
  const VectorXd coarse = run(0.02);
  const VectorXd mid = run(0.01);
  const VectorXd fine = run(0.005);
  const double order = std::log2((coarse - mid).norm() / (mid - fine).norm());
  CHECK(order >= 3.8);
}

TEST_CASE("BAOAB equilibrium at the well minimum") {
  DynamicalModel m{LangevinDoubleWell{1.0, 10.0, 0.0, DriftSign::kAttracting}, 0.01};
  RngStream rng(1, 1);
  for (double dt : {0.001, 0.01, 0.1}) {
    const auto s = baoab_step(vec({5.0}), vec({0.0}), m, dt, rng);
    CHECK(s.q(0) == 5.0);
    CHECK(s.p(0) == 0.0);
  }
}

TEST_CASE("BAOAB without friction is velocity Verlet") {
  const LangevinDoubleWell params{1.0, 0.0, 0.0, DriftSign::kAttracting};
  const GradientFn harmonic = [](const VectorXd& q) { return q; };
  RngStream rng(1, 1);
  auto energy = [](const PhaseState& s) { return 0.5 * s.p.squaredNorm() + 0.5 * s.q.squaredNorm(); };

  auto max_drift = [&](double dt) {
    PhaseState s{vec({1.0}), vec({0.0})};
    const double e0 = energy(s);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      s = baoab_step(s.q, s.p, harmonic, params, dt, rng);
      worst = std::max(worst, std::abs(energy(s) - e0));
    }
    return worst;
  };
  const double d1 = max_drift(0.05);
  const double d2 = max_drift(0.025);
  CHECK(d1 < 1e-3);
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.1));

  // Time reversibility: forward dt, flip momentum, forward dt, flip back.
  const GradientFn well = [](const VectorXd& q) {
    return q.unaryExpr([](double v) { return double_well_gradient(v); }).eval();
  };
  PhaseState s{vec({1.3}), vec({0.4})};
  const PhaseState fwd = baoab_step(s.q, s.p, well, params, 0.01, rng);
  const PhaseState back = baoab_step(fwd.q, -fwd.p, well, params, 0.01, rng);
  CHECK(std::abs(back.q(0) - s.q(0)) < 1e-12);
  CHECK(std::abs(-back.p(0) - s.p(0)) < 1e-12);
}

TEST_CASE("Langevin long-run marginal is bimodal near the wells") {
  DynamicalModel m{LangevinDoubleWell{}, 0.01};
  RngStream rng(2024, 5);
  const int steps = 1000000;
  const double lo = -8.0;
  const double width = 0.25;
  std::vector<double> hist(64, 0.0);
  VectorXd s = vec({-5.0, 0.0});
  for (int k = 0; k < steps; ++k) {
    s = propagate(m, s, 0.01, rng);
    const int bin = static_cast<int>(std::floor((s(0) - lo) / width));
    if (bin >= 0 && bin < 64) hist[static_cast<std::size_t>(bin)] += 1.0;
  }
  // Gibbs marginal proportional to exp(-2 gamma phi / sigma^2).
  std::vector<double> gibbs(64);
  double zsum = 0.0;
  for (int b = 0; b < 64; ++b) {
    double acc = 0.0;
    for (int k = 0; k < 20; ++k) {
      const double x = lo + (b + (k + 0.5) / 20.0) * width;
      acc += std::exp(-2.0 * 10.0 * double_well_potential(x) / 5000.0);
    }
    gibbs[static_cast<std::size_t>(b)] = acc;
    zsum += acc;
  }
  double total = 0.0;
  for (double h : hist) total += h;
  double l1 = 0.0;
  for (int b = 0; b < 64; ++b) {
    l1 += std::abs(hist[static_cast<std::size_t>(b)] / total - gibbs[static_cast<std::size_t>(b)] / zsum);
  }
  CHECK(l1 < 0.15);
  auto argmax = [&](int from, int to) {
    int best = from;
    for (int b = from; b < to; ++b) {
      if (hist[static_cast<std::size_t>(b)] > hist[static_cast<std::size_t>(best)]) best = b;
    }
    return lo + (best + 0.5) * width;
  };
  CHECK(std::abs(argmax(0, 32) + 5.0) < 0.75);
  CHECK(std::abs(argmax(32, 64) - 5.0) < 0.75);
}

TEST_CASE("observation operators") {
  const Index n = 120;
  std::vector<Index> even;
  for (Index i = 0; i < n; i += 2) even.push_back(i);
  const auto obs = ObservationModel::selection(even, 8.0 * MatrixXd::Identity(60, 60), n);
  RngStream rng(9, 9);
  const VectorXd x = rng.normal_vector(n);
  const VectorXd y = obs.observe(x);
  REQUIRE(y.size() == 60);
  for (Index k = 0; k < 60; ++k) CHECK(y(k) == x(2 * k));

  const auto full = ObservationModel::selection({0, 1, 2}, MatrixXd::Identity(3, 3), 3);
  CHECK(full.observe(x.head(3)) == x.head(3));
  const auto first = ObservationModel::selection({0}, MatrixXd::Constant(1, 1, 8.0), 3);
  CHECK(first.observe(x.head(3)) == x.head(1));

  CHECK_THROWS_AS(ObservationModel::selection({0, 0}, MatrixXd::Identity(2, 2), 3), ConfigError);
  CHECK_THROWS_AS(ObservationModel::selection({3}, MatrixXd::Identity(1, 1), 3), ConfigError);
  MatrixXd not_spd(2, 2);
  not_spd << 1, 2, 2, 1;
  CHECK_THROWS_AS(ObservationModel::selection({0, 1}, not_spd, 3), ConfigError);

  const auto squared = ObservationModel::function(
      [](const VectorXd& s) { return s.head(1).array().square().matrix().eval(); }, 1,
      MatrixXd::Identity(1, 1));
  CHECK(squared.observe(vec({3.0, 1.0}))(0) == 9.0);
}

TEST_CASE("twin generation") {
  const auto obs = ObservationModel::selection({0}, MatrixXd::Constant(1, 1, 8.0), 3);
  RngStream a(7, 1);
  const auto noiseless =
      generate_twin(l63(), obs, vec({1.0, 1.0, 1.0}), 20, 0.12, a, NoiseMode::kNoiseless);
  REQUIRE(noiseless.truth.size() == 20);
  REQUIRE(noiseless.observations.size() == 20);
  for (std::size_t k = 0; k < 20; ++k) {
    CHECK(noiseless.observations[k](0) == noiseless.truth[k](0));
  }
  CHECK(noiseless.truth[0] == integrate(l63(), vec({1.0, 1.0, 1.0}), 0.12));

  RngStream b(7, 1);
  RngStream c(7, 1);
  const auto r1 = generate_twin(l63(), obs, vec({1.0, 1.0, 1.0}), 50, 0.12, b);
  const auto r2 = generate_twin(l63(), obs, vec({1.0, 1.0, 1.0}), 50, 0.12, c);
  double sq = 0.0;
  for (std::size_t k = 0; k < 50; ++k) {
    CHECK(r1.observations[k] == r2.observations[k]);
    sq += std::pow(r1.observations[k](0) - r1.truth[k](0), 2);
  }
  CHECK(sq / 50.0 == doctest::Approx(8.0).epsilon(0.5));

  DynamicalModel lang{LangevinDoubleWell{}, 0.01};
  const auto both = ObservationModel::selection({0, 1}, 0.5 * MatrixXd::Identity(2, 2), 2);
  RngStream d(1, 1);
  const auto run = generate_twin(lang, both, vec({-5.0, 0.0}), 50, 0.8, d);
  CHECK(run.cycles == 50);
  CHECK(run.observations.back().size() == 2);
}
