#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "adatemp/error.hpp"
#include "adatemp/particle_filters.hpp"

using namespace adatemp;
using Eigen::Vector2d;

namespace {

VectorXd random_simplex(Index n, RngStream& rng) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = -std::log(rng.uniform() + 1e-300);
  return v / v.sum();
}

// Minimum objective over every basic feasible solution of an n x m
// transportation problem, enumerating spanning trees of K_{n,m}.
double vertex_oracle(const MatrixXd& cost, const VectorXd& a, const VectorXd& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int cells = n * m;
  const int k = n + m - 1;
  double best = INFINITY;
  std::vector<int> pick(static_cast<std::size_t>(k));
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    // Solve by repeatedly peeling leaves of the candidate tree.
    std::vector<double> ra(a.data(), a.data() + n);
    std::vector<double> rb(b.data(), b.data() + m);
    std::vector<char> used(static_cast<std::size_t>(k), 0);
    std::vector<double> flow(static_cast<std::size_t>(k), 0.0);
    int assigned = 0;
    bool progress = true;
    while (progress && assigned < k) {
      progress = false;
      for (int node = 0; node < n + m && assigned < k; ++node) {
        int degree = 0;
        int edge = -1;
        for (int e = 0; e < k; ++e) {
          if (used[static_cast<std::size_t>(e)]) continue;
          const int i = pick[static_cast<std::size_t>(e)] / m;
          const int j = pick[static_cast<std::size_t>(e)] % m;
          if ((node < n && i == node) || (node >= n && j == node - n)) {
            ++degree;
            edge = e;
          }
        }
        if (degree != 1) continue;
        const int i = pick[static_cast<std::size_t>(edge)] / m;
        const int j = pick[static_cast<std::size_t>(edge)] % m;
        const double x = node < n ? ra[static_cast<std::size_t>(i)] : rb[static_cast<std::size_t>(j)];
        flow[static_cast<std::size_t>(edge)] = x;
        ra[static_cast<std::size_t>(i)] -= x;
        rb[static_cast<std::size_t>(j)] -= x;
        used[static_cast<std::size_t>(edge)] = 1;
        ++assigned;
        progress = true;
      }
    }
    if (assigned == k) {
      bool feasible = true;
      double obj = 0.0;
      for (int e = 0; e < k; ++e) {
        const double x = flow[static_cast<std::size_t>(e)];
        if (x < -1e-12) feasible = false;
        obj += x * cost(pick[static_cast<std::size_t>(e)] / m, pick[static_cast<std::size_t>(e)] % m);
      }
      for (double r : ra) feasible = feasible && std::abs(r) < 1e-12;
      for (double r : rb) feasible = feasible && std::abs(r) < 1e-12;
      if (feasible) best = std::min(best, obj);
    }
    int pos = k - 1;
    while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == cells - k + pos) --pos;
    if (pos < 0) break;
    ++pick[static_cast<std::size_t>(pos)];
    for (int q = pos + 1; q < k; ++q) {
      pick[static_cast<std::size_t>(q)] = pick[static_cast<std::size_t>(q - 1)] + 1;
    }
  }
  return best;
}

double permutation_oracle(const MatrixXd& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double obj = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) obj += cost(static_cast<Index>(i), perm[i]);
    best = std::min(best, obj);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(cost.rows());
}

void check_marginals(const CouplingMatrix& c, const VectorXd& a, const VectorXd& b, double tol) {
  CHECK(c.transport.minCoeff() >= 0.0);
  CHECK((c.transport.rowwise().sum() - a).cwiseAbs().maxCoeff() <= tol);
  CHECK((c.transport.colwise().sum().transpose() - b).cwiseAbs().maxCoeff() <= tol);
}

LocalizationConfig line_config(Index n, double radius, double period) {
  LocalizationConfig cfg;
  cfg.radius = radius;
  for (Index i = 0; i < n; ++i) cfg.state_positions.push_back(static_cast<double>(i));
  cfg.period = period;
  return cfg;
}

}  // namespace

TEST_CASE("importance weights") {
  MatrixXd z(1, 2);
  z << 1.0, 3.0;
  const auto obs = ObservationModel::selection({0}, MatrixXd::Identity(1, 1), 1);
  const auto w = importance_weights(Ensemble(z), VectorXd::Ones(1), obs, 1.0);
  CHECK(w[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(std::exp(-2.0) / (1.0 + std::exp(-2.0))).epsilon(1e-14));

  const auto flat = importance_weights(Ensemble(z), VectorXd::Ones(1), obs, 1e-12);
  CHECK(std::abs(flat[0] - 0.5) < 1e-10);

  MatrixXd at_obs(2, 4);
  at_obs << 2, 2, 2, 2, 1, 5, -3, 0;
  const auto first = ObservationModel::selection({0}, MatrixXd::Identity(1, 1), 2);
  const auto u = importance_weights(Ensemble(at_obs), VectorXd::Constant(1, 2.0), first, 1.0);
  CHECK((u.values().array() - 0.25).abs().maxCoeff() == 0.0);

  double previous = 0.0;
  for (double alpha : {0.05, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const double closer = importance_weights(Ensemble(z), VectorXd::Ones(1), obs, alpha)[0];
    CHECK(closer >= previous);
    previous = closer;
  }
  CHECK_THROWS_AS(importance_weights(Ensemble(z), VectorXd::Ones(1), obs, 0.0), ConfigError);

  MatrixXd far(1, 2);
  far << 1e200, -1e200;
  CHECK_THROWS_WITH_AS(importance_weights(Ensemble(far), VectorXd::Zero(1), obs, 1.0),
                       "degenerate weights", NumericalError);
}

TEST_CASE("resampling") {
  RngStream rng(1, 1);
  VectorXd one = VectorXd::Zero(5);
  one(0) = 1.0;
  for (auto method : {Resampler::kMultinomial, Resampler::kSystematic}) {
    const auto idx = resample(WeightVector::from_unnormalized(one), rng, method);
    CHECK(std::all_of(idx.begin(), idx.end(), [](Index i) { return i == 0; }));
  }
  auto sys = resample(WeightVector::uniform(9), rng, Resampler::kSystematic);
  std::sort(sys.begin(), sys.end());
  for (Index i = 0; i < 9; ++i) CHECK(sys[static_cast<std::size_t>(i)] == i);

  const Index n = 8;
  const int reps = 100000;
  std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < reps; ++r) {
    counts[static_cast<std::size_t>(resample(WeightVector::uniform(n), rng)[0])] += 1.0;
  }
  const double p = 1.0 / static_cast<double>(n);
  const double sigma = std::sqrt(p * (1.0 - p) / reps);
  for (double c : counts) CHECK(std::abs(c / reps - p) <= 3.0 * sigma);
}

TEST_CASE("systematic resampling matches expected counts") {
  RngStream rng(2, 2);
  const VectorXd w = random_simplex(6, rng);
  const auto wv = WeightVector::from_unnormalized(w);
  for (int r = 0; r < 50; ++r) {
    const auto idx = resample(wv, rng, Resampler::kSystematic);
    for (Index i = 0; i < 6; ++i) {
      const auto c = std::count(idx.begin(), idx.end(), i);
      CHECK(std::abs(static_cast<double>(c) - 6.0 * w(i)) < 1.0 + 1e-12);
    }
  }
}

TEST_CASE("bootstrap filter") {
  RngStream rng(3, 3);
  const Ensemble e(rng.normal_matrix(2, 7));
  const auto obs = ObservationModel::selection({0}, MatrixXd::Identity(1, 1), 2);
  PfConfig cfg;
  cfg.rejuvenation = 0.0;
  cfg.resampler = Resampler::kSystematic;
  cfg.tempering_exponent = 1e-14;
  const Ensemble a = bootstrap_update(e, VectorXd::Zero(1), obs, cfg, rng);
  std::vector<double> before(7);
  std::vector<double> after(7);
  for (Index j = 0; j < 7; ++j) {
    before[static_cast<std::size_t>(j)] = e.members()(1, j);
    after[static_cast<std::size_t>(j)] = a.members()(1, j);
  }
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  CHECK(before == after);

  MatrixXd two(1, 2);
  two << 0.0, 100.0;
  const auto scalar = ObservationModel::selection({0}, MatrixXd::Identity(1, 1), 1);
  cfg.tempering_exponent = 1.0;
  cfg.resampler = Resampler::kMultinomial;
  const Ensemble collapsed = bootstrap_update(Ensemble(two), VectorXd::Zero(1), scalar, cfg, rng);
  CHECK(collapsed.members()(0, 0) == 0.0);
  CHECK(collapsed.members()(0, 1) == 0.0);

  cfg.rejuvenation = 0.2;
  RngStream r1(11, 4);
  RngStream r2(11, 4);
  CHECK(bootstrap_update(e, VectorXd::Ones(1), obs, cfg, r1).members() ==
        bootstrap_update(e, VectorXd::Ones(1), obs, cfg, r2).members());
}

TEST_CASE("Langevin single cycle ESS recomputed from scratch") {
  DynamicalModel model{LangevinDoubleWell{}, 0.01};
  RngStream rng(4, 0);
  MatrixXd z(2, 35);
  for (Index i = 0; i < 35; ++i) {
    z.col(i) = propagate(model, Vector2d(-5.0 + rng.normal(), rng.normal()), 0.8, rng);
  }
  const auto obs = ObservationModel::selection({0, 1}, 0.5 * MatrixXd::Identity(2, 2), 2);
  const VectorXd y = Vector2d(-4.0, 1.0);
  const auto w = importance_weights(Ensemble(z), y, obs, 1.0);
  std::vector<double> raw(35);
  double top = -INFINITY;
  for (Index i = 0; i < 35; ++i) {
    const double d0 = z(0, i) - y(0);
    const double d1 = z(1, i) - y(1);
    raw[static_cast<std::size_t>(i)] = -(d0 * d0 + d1 * d1) / (2.0 * 0.5);
    top = std::max(top, raw[static_cast<std::size_t>(i)]);
  }
  double sum = 0.0;
  for (double& r : raw) sum += (r = std::exp(r - top));
  double sq = 0.0;
  for (double r : raw) sq += (r / sum) * (r / sum);
  CHECK(effective_sample_size(w) == doctest::Approx(1.0 / sq).epsilon(1e-10));
  CHECK(effective_sample_size(w) < 35.0);
}

TEST_CASE("exact OT closed forms") {
  RngStream rng(5, 5);
  const MatrixXd pts = rng.normal_matrix(3, 6);
  const VectorXd u = VectorXd::Constant(6, 1.0 / 6.0);
  const auto diag = solve_ot_exact(squared_distances(pts), u, u);
  CHECK((diag.transport - MatrixXd::Identity(6, 6) / 6.0).cwiseAbs().maxCoeff() <= 1e-15);

  MatrixXd cost(2, 2);
  cost << 0, 1, 1, 0;
  const auto forced = solve_ot_exact(cost, Vector2d(1.0, 0.0), Vector2d(0.5, 0.5));
  CHECK(forced.transport(0, 0) == 0.5);
  CHECK(forced.transport(0, 1) == 0.5);
  CHECK(forced.transport(1, 0) == 0.0);
  CHECK(forced.transport(1, 1) == 0.0);

  CHECK_THROWS_WITH_AS(solve_ot_exact(cost, Vector2d(0.7, 0.7), Vector2d(0.5, 0.5)),
                       doctest::Contains("infeasible marginals"), ConfigError);
  CHECK_THROWS_WITH_AS(solve_ot_exact(cost, Vector2d(1.2, -0.2), Vector2d(0.5, 0.5)),
                       doctest::Contains("infeasible marginals"), ConfigError);
}

TEST_CASE("exact OT matches the spanning-tree vertex oracle on 4x4 instances") {
  RngStream rng(6, 6);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixXd cost = rng.normal_matrix(4, 4).cwiseAbs() * 3.0;
    if (trial % 3 == 0) cost = cost.array().round();  // ties and degeneracy
    const VectorXd a = trial % 2 == 0 ? random_simplex(4, rng) : VectorXd::Constant(4, 0.25);
    const VectorXd b = random_simplex(4, rng);
    const auto c = solve_ot_exact(cost, a, b);
    check_marginals(c, a, b, 1e-9);
    CHECK(std::abs(c.objective - vertex_oracle(cost, a, b)) <= 1e-9);
    CHECK(std::abs(c.objective - c.transport.cwiseProduct(cost).sum()) <= 1e-12);
  }
}

TEST_CASE("exact OT matches assignment optimum on degenerate instances") {
  RngStream rng(7, 7);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 7;
    MatrixXd cost = (rng.normal_matrix(n, n).cwiseAbs() * 1.5).array().round();
    const VectorXd u = VectorXd::Constant(n, 1.0 / n);
    const auto c = solve_ot_exact(cost, u, u);
    check_marginals(c, u, u, 1e-12);
    CHECK(std::abs(c.objective - permutation_oracle(cost)) <= 1e-12);
  }
}

TEST_CASE("Sinkhorn coupling") {
  RngStream rng(8, 8);
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixXd pts = rng.normal_matrix(2, 10);
    const MatrixXd cost = squared_distances(pts);
    const VectorXd a = random_simplex(10, rng);
    const VectorXd b = VectorXd::Constant(10, 0.1);
    const auto exact = solve_ot_exact(cost, a, b);
    const auto entropic = solve_ot_sinkhorn(cost, a, b);
    check_marginals(entropic, a, b, 1e-8);
    CHECK(exact.objective <= entropic.objective + 1e-12);
  }
  SinkhornOptions starved;
  starved.max_iterations = 1;
  const MatrixXd pts = rng.normal_matrix(2, 10);
  CHECK_THROWS_AS(solve_ot_sinkhorn(squared_distances(pts), random_simplex(10, rng),
                                    VectorXd::Constant(10, 0.1), starved),
                  NumericalError);
}

TEST_CASE("ETPF") {
  RngStream rng(9, 9);
  MatrixXd z = rng.normal_matrix(2, 6);
  z.row(0).setConstant(1.0);
  const auto obs = ObservationModel::selection({0}, MatrixXd::Identity(1, 1), 2);
  PfConfig cfg;
  cfg.rejuvenation = 0.0;
  const Ensemble same = etpf_update(Ensemble(z), VectorXd::Constant(1, 0.3), obs, cfg, rng);
  CHECK((same.members() - z).cwiseAbs().maxCoeff() <= 1e-14);

  MatrixXd two(1, 2);
  two << 0.0, 100.0;
  const auto scalar = ObservationModel::selection({0}, MatrixXd::Identity(1, 1), 1);
  const Ensemble collapsed = etpf_update(Ensemble(two), VectorXd::Zero(1), scalar, cfg, rng);
  CHECK(collapsed.members()(0, 0) == 0.0);
  CHECK(collapsed.members()(0, 1) == 0.0);

  for (int trial = 0; trial < 10; ++trial) {
    const Ensemble e(rng.normal_matrix(3, 12) * 2.0);
    const auto o = ObservationModel::selection({0, 2}, MatrixXd::Identity(2, 2), 3);
    const VectorXd y = rng.normal_vector(2);
    cfg.tempering_exponent = trial % 2 == 0 ? 1.0 : 0.2;
    const auto w = importance_weights(e, y, o, cfg.tempering_exponent);
    const Ensemble a = etpf_update(e, y, o, cfg, rng);
    CHECK((a.members().rowwise().mean() - e.members() * w.values()).norm() <= 1e-9);
  }
}

TEST_CASE("LETPF reduces to ETPF without localization effects") {
  RngStream rng(10, 10);
  const Ensemble e(rng.normal_matrix(6, 10) * 2.0);
  const auto obs = ObservationModel::selection({0, 1, 2, 3, 4, 5}, MatrixXd::Identity(6, 6) * 4.0, 6);
  PfConfig cfg;
  cfg.rejuvenation = 0.0;
  LocalizationConfig loc = line_config(6, 1e300, 6.0);
  loc.obs_positions = loc.state_positions;
  cfg.localization = loc;
  const VectorXd y = rng.normal_vector(6);
  RngStream r1(1, 1);
  RngStream r2(1, 1);
  const Ensemble global = etpf_update(e, y, obs, cfg, r1);
  const Ensemble local = letpf_update(e, y, obs, cfg, r2);
  CHECK((global.members() - local.members()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("LETPF keeps unobserved components") {
  RngStream rng(11, 11);
  const Ensemble e(rng.normal_matrix(20, 8));
  LocalizationConfig loc = line_config(20, 2.0, 1e9);
  loc.period.reset();
  loc.obs_positions = {0.0, 1.0};
  const auto obs = ObservationModel::selection({0, 1}, MatrixXd::Identity(2, 2), 20);
  PfConfig cfg;
  cfg.rejuvenation = 0.0;
  cfg.localization = loc;
  const Ensemble a = letpf_update(e, Vector2d(2.0, -2.0), obs, cfg, rng);
  for (Index g = 3; g < 20; ++g) CHECK(a.members().row(g) == e.members().row(g));
}

TEST_CASE("LETPF couplings on the Lorenz 96 layout have exact marginals") {
  RngStream rng(12, 12);
  const Index n = 120;
  const Ensemble e(rng.normal_matrix(n, 35) * 3.0);
  std::vector<Index> even;
  LocalizationConfig loc = line_config(n, 2.0, static_cast<double>(n));
  for (Index i = 0; i < n; i += 2) {
    even.push_back(i);
    loc.obs_positions.push_back(static_cast<double>(i));
  }
  const auto obs = ObservationModel::selection(even, 8.0 * MatrixXd::Identity(60, 60), n);
  PfConfig cfg;
  cfg.localization = loc;
  const VectorXd y = rng.normal_vector(60) * 3.0;
  const auto couplings = letpf_couplings(e, y, obs, cfg);
  CHECK(couplings.size() == 120);
  const VectorXd cols = VectorXd::Constant(35, 1.0 / 35.0);
  for (const auto& c : couplings) check_marginals(c.coupling, c.weights.values(), cols, 1e-9);

  RngStream r1(2, 2);
  RngStream r2(2, 2);
  CHECK(letpf_update(e, y, obs, cfg, r1).members() == letpf_update(e, y, obs, cfg, r2).members());
  cfg.global_rejuvenation = true;
  CHECK(letpf_update(e, y, obs, cfg, r1).members().allFinite());
}
