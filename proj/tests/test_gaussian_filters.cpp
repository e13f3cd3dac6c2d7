#include <doctest.h>

#include <cmath>
#include <vector>

#include "adatemp/error.hpp"
#include "adatemp/gaussian_filters.hpp"

using namespace adatemp;

namespace {

MatrixXd empirical_cov(const MatrixXd& z) {
  const MatrixXd a = z.colwise() - z.rowwise().mean();
  return a * a.transpose() / static_cast<double>(z.cols() - 1);
}

MatrixXd random_spd(Index n, RngStream& rng) {
  const MatrixXd b = rng.normal_matrix(n, n);
  return b * b.transpose() + MatrixXd::Identity(n, n);
}

LocalizationConfig ring_config(Index n, double radius) {
  LocalizationConfig cfg;
  cfg.radius = radius;
  for (Index i = 0; i < n; ++i) cfg.state_positions.push_back(static_cast<double>(i));
  for (Index i = 0; i < n; i += 2) cfg.obs_positions.push_back(static_cast<double>(i));
  cfg.period = static_cast<double>(n);
  return cfg;
}

}  // namespace

TEST_CASE("square root matrix closed forms") {
  MatrixXd ha(1, 2);
  ha << -1, 1;
  const MatrixXd r = MatrixXd::Identity(1, 1);
  const MatrixXd s = square_root_matrix(ha, r, 1.0);
  const double a = (1.0 + 1.0 / std::sqrt(3.0)) / 2.0;
  const double b = (1.0 - 1.0 / std::sqrt(3.0)) / 2.0;
  CHECK(s(0, 0) == doctest::Approx(a).epsilon(1e-14));
  CHECK(s(0, 1) == doctest::Approx(b).epsilon(1e-14));
  CHECK(s(1, 0) == doctest::Approx(b).epsilon(1e-14));
  CHECK(s(1, 1) == doctest::Approx(a).epsilon(1e-14));
  CHECK(square_root_matrix(ha, r, 0.0) == MatrixXd::Identity(2, 2));

  MatrixXd bad(1, 1);
  bad << -1.0;
  CHECK_THROWS_AS(square_root_matrix(ha, bad, 1.0), ConfigError);
}

TEST_CASE("square root matrix residual and unbiasedness") {
  RngStream rng(5, 5);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 3 + trial % 8;
    const Index ny = 1 + trial % 4;
    MatrixXd hz = rng.normal_matrix(ny, n) * 2.0;
    const MatrixXd ha = hz.colwise() - hz.rowwise().mean();
    const MatrixXd r = random_spd(ny, rng);
    const double beta = 0.1 + 0.9 * rng.uniform();
    const MatrixXd s = square_root_matrix(ha, r, beta);
    const MatrixXd target = (MatrixXd::Identity(n, n) +
                             beta / static_cast<double>(n - 1) * ha.transpose() * r.inverse() * ha)
                                .inverse();
    CHECK((s * s - target).norm() <= 1e-10);
    CHECK((s - s.transpose()).norm() <= 1e-12);
    CHECK((s.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
    CHECK((s.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
    CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(s).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("weights and coefficients sum to one") {
  RngStream rng(6, 6);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 4 + trial % 6;
    MatrixXd hz = rng.normal_matrix(2, n);
    const MatrixXd ha = hz.colwise() - hz.rowwise().mean();
    const MatrixXd prec = random_spd(2, rng).inverse();
    const auto c = esrf_coefficients(ha, rng.normal_vector(2), prec, 1.0);
    CHECK(std::abs(c.weights.sum() - 1.0) <= 1e-10);
    CHECK((c.d.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("ESRF without information or inflation is the identity") {
  RngStream rng(1, 2);
  const Ensemble e(rng.normal_matrix(3, 6));
  const auto obs = ObservationModel::selection({0, 2}, MatrixXd::Identity(2, 2), 3);
  EsrfConfig cfg;
  cfg.inflation = 1.0;
  cfg.tempering_exponent = 0.0;
  CHECK(esrf_update(e, VectorXd::Ones(2), obs, cfg).members() == e.members());
}

TEST_CASE("scalar ESRF matches the Kalman update") {
  MatrixXd z(1, 2);
  z << -1, 1;
  const auto obs = ObservationModel::selection({0}, MatrixXd::Identity(1, 1), 1);
  EsrfConfig cfg;
  cfg.inflation = 1.0;
  const Ensemble a = esrf_update(Ensemble(z), VectorXd::Ones(1), obs, cfg);
  CHECK(a.members().mean() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(empirical_cov(a.members())(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("ESRF matches Kalman moments in linear Gaussian settings") {
  RngStream rng(7, 7);
  for (int trial = 0; trial < 20; ++trial) {
    const Index nz = 1 + trial % 3;
    const Index n = 4 + trial % 7;
    const MatrixXd z = rng.normal_matrix(nz, n) * 1.5;
    std::vector<Index> idx;
    for (Index i = 0; i < nz; i += (trial % 2 == 0 ? 1 : 2)) idx.push_back(i);
    const auto ny = static_cast<Index>(idx.size());
    const MatrixXd r = random_spd(ny, rng) * 0.5;
    const auto obs = ObservationModel::selection(idx, r, nz);
    MatrixXd h = MatrixXd::Zero(ny, nz);
    for (Index k = 0; k < ny; ++k) h(k, idx[static_cast<std::size_t>(k)]) = 1.0;
    const VectorXd y = rng.normal_vector(ny);

    EsrfConfig cfg;
    cfg.inflation = 1.0 + 0.1 * rng.uniform();
    const Ensemble inflated = apply_inflation(Ensemble(z), cfg.inflation);
    const MatrixXd p = empirical_cov(inflated.members());
    const VectorXd m = inflated.members().rowwise().mean();
    const MatrixXd k = p * h.transpose() * (h * p * h.transpose() + r).inverse();
    const VectorXd ma = m + k * (y - h * m);
    const MatrixXd pa = p - k * h * p;

    const Ensemble a = esrf_update(Ensemble(z), y, obs, cfg);
    CHECK((a.members().rowwise().mean() - ma).norm() <= 1e-9);
    CHECK((empirical_cov(a.members()) - pa).norm() <= 1e-9);
  }
}

TEST_CASE("tempered ESRF moves less toward the observation") {
  MatrixXd z(1, 2);
  z << -1, 1;
  const auto obs = ObservationModel::selection({0}, MatrixXd::Identity(1, 1), 1);
  EsrfConfig cfg;
  cfg.inflation = 1.0;
  double previous = 1.0;
  for (double beta : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    cfg.tempering_exponent = beta;
    const double mean = esrf_update(Ensemble(z), VectorXd::Ones(1), obs, cfg).members().mean();
    CHECK(std::abs(mean - 1.0) <= previous + 1e-15);
    previous = std::abs(mean - 1.0);
  }
  cfg.tempering_exponent = 1.5;
  CHECK_THROWS_AS(esrf_update(Ensemble(z), VectorXd::Ones(1), obs, cfg), ConfigError);
}

TEST_CASE("localization weights") {
  const auto cfg = ring_config(120, 2.0);
  const VectorXd c0 = localization_weights(cfg, 0.0);
  CHECK(c0(0) == 1.0);
  for (Index l = 1; l < c0.size(); ++l) CHECK(c0(l) == 0.0);
  const VectorXd c119 = localization_weights(cfg, 119.0);
  CHECK(c119(59) == 0.5);  // position 118
  CHECK(c119(0) == 0.5);   // position 0 across the seam
  CHECK((c119.array() > 0.0).count() == 2);
  for (Index g = 0; g < 120; ++g) {
    CHECK((localization_weights(cfg, static_cast<double>(g)).array() > 0.0).count() <= 3);
  }
  CHECK(taper_weight(Taper::kHat, 1.0) == 0.0);
  CHECK(taper_weight(Taper::kGaspariCohn, 0.0) == 1.0);
  CHECK(taper_weight(Taper::kGaspariCohn, 2.0) == 0.0);
  CHECK(taper_weight(Taper::kGaspariCohn, 1.0 - 1e-12) ==
        doctest::Approx(taper_weight(Taper::kGaspariCohn, 1.0 + 1e-12)));
  LocalizationConfig bad = cfg;
  bad.radius = 0.0;
  CHECK_THROWS_AS(bad.validate(120, 60), ConfigError);
}

TEST_CASE("LESRF with unit taper equals ESRF") {
  RngStream rng(8, 8);
  const Ensemble e(rng.normal_matrix(10, 8) * 2.0);
  std::vector<Index> idx{0, 2, 4, 6, 8};
  const auto obs = ObservationModel::selection(idx, random_spd(5, rng), 10);
  EsrfConfig cfg;
  LocalizationConfig loc = ring_config(10, 1e300);
  cfg.localization = loc;
  const VectorXd y = rng.normal_vector(5);
  const Ensemble global = esrf_update(e, y, obs, cfg);
  const Ensemble local = lesrf_update(e, y, obs, cfg);
  CHECK((global.members() - local.members()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("LESRF leaves unobserved regions untouched up to inflation") {
  RngStream rng(9, 9);
  const Ensemble e(rng.normal_matrix(20, 6));
  LocalizationConfig loc;
  loc.radius = 2.0;
  for (Index i = 0; i < 20; ++i) loc.state_positions.push_back(static_cast<double>(i));
  loc.obs_positions = {0.0, 1.0};
  const auto obs = ObservationModel::selection({0, 1}, MatrixXd::Identity(2, 2), 20);
  EsrfConfig cfg;
  cfg.localization = loc;
  const Ensemble a = lesrf_update(e, VectorXd::Constant(2, 3.0), obs, cfg);
  const Ensemble inflated = apply_inflation(e, cfg.inflation);
  for (Index g = 3; g < 20; ++g) {
    CHECK((a.members().row(g) - inflated.members().row(g)).norm() <= 1e-14);
  }
  CHECK((a.members().row(0) - inflated.members().row(0)).norm() > 1e-3);
  EsrfConfig missing;
  CHECK_THROWS_AS(lesrf_update(e, VectorXd::Zero(2), obs, missing), ConfigError);
}
