#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nlffr/errors.hpp"
#include "nlffr/inference.hpp"
#include "nlffr/reference.hpp"
#include "nlffr/sim.hpp"
#include "oracles.hpp"

using namespace nlffr;

namespace {

FitConfig fixed_config(double eps_x, double gamma_x) {
  FitConfig cfg = default_fit_config(TimeKernelKind::GaussianRBF);
  for (SmoothingConfig* s : {&cfg.x, &cfg.y}) {
    s->eps_grid = {1e-3};
    s->gamma_grid = {7.0};
    s->fixed = true;
  }
  cfg.regression = {{eps_x}, {gamma_x}, GammaScale::Absolute, true};
  return cfg;
}

sim::Sample sample(int n, std::uint64_t seed) {
  sim::ScenarioConfig cfg;
  return sim::generate_sample(cfg, n, seed);
}

Eigen::MatrixXd random_gx(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(n, n + 2);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
  return center_gram(a * a.transpose());
}

}  // namespace

TEST_CASE("eigen_system: 2x2 closed form") {
  const double g = 0.8;
  Eigen::MatrixXd gx(2, 2);
  gx << g, -g, -g, g;
  const auto es = eigen_system(gx);
  REQUIRE(es.retained() == 1);
  CHECK(es.lambdas(0) == doctest::Approx(g).epsilon(1e-14));
  const Eigen::VectorXd a = es.coords.col(0);
  CHECK(a.dot(gx * a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eigen_system: trace identity, residuals and dense-solver oracle") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 6;
    const Eigen::MatrixXd gx = random_gx(n, rng);
    const auto es = eigen_system(gx);
    CHECK(es.all_lambdas.sum() == doctest::Approx(gx.trace() / n).epsilon(1e-10));
    for (Eigen::Index j = 1; j < es.all_lambdas.size(); ++j) CHECK(es.all_lambdas(j) <= es.all_lambdas(j - 1));
    for (Eigen::Index j = 0; j < es.retained(); ++j) {
      const Eigen::VectorXd a = es.coords.col(j);
      CHECK((gx * a / n - es.lambdas(j) * a).norm() <= 1e-8 * gx.norm());
      CHECK(a.dot(gx * a) == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Oracle: eigenvalues of n^-1 G from a generic (non-symmetric) solver.
    Eigen::EigenSolver<Eigen::MatrixXd> gen(gx / n);
    std::vector<double> ev;
    for (Eigen::Index j = 0; j < n; ++j) ev.push_back(std::max(gen.eigenvalues()(j).real(), 0.0));
    std::sort(ev.rbegin(), ev.rend());
    for (Eigen::Index j = 0; j < es.retained(); ++j) CHECK(std::abs(ev[j] - es.lambdas(j)) <= 1e-8);
  }
  CHECK_THROWS_AS(eigen_system(Eigen::MatrixXd::Zero(3, 3)), NumericalError);
}

TEST_CASE("phi_at: zero, linearity, hand-computed 2x2") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd gx = random_gx(5, rng);
  const auto es = eigen_system(gx);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
  CHECK(phi_at(es, 0, zero) == 0.0);
  const Eigen::VectorXd d1 = Eigen::VectorXd::Random(5), d2 = Eigen::VectorXd::Random(5);
  for (Eigen::Index j = 0; j < es.retained(); ++j)
    CHECK(phi_at(es, j, d1 + d2) == doctest::Approx(phi_at(es, j, d1) + phi_at(es, j, d2)).epsilon(1e-12));
  CHECK_THROWS_AS(phi_at(es, es.retained(), d1), ValidationError);
  CHECK_THROWS_AS(phi_at(es, 0, Eigen::VectorXd::Zero(3)), ValidationError);

  // Two subjects with kappa(X1, X2) = k: G = (1-k)/2 [[1,-1],[-1,1]], lambda = (1-k)/2,
  // a = (1,-1)/sqrt(2) / sqrt(2 lambda). At x0 = X1, d = ((1-k)/2, (k-1)/2).
  const double k = 0.3;
  Eigen::MatrixXd kx(2, 2);
  kx << 1, k, k, 1;
  const auto es2 = eigen_system(center_gram(kx));
  const double lambda = (1 - k) / 2;
  REQUIRE(es2.retained() == 1);
  CHECK(es2.lambdas(0) == doctest::Approx(lambda));
  Eigen::VectorXd d(2);
  d << (1 - k) / 2, (k - 1) / 2;
  const double want = (1 - k) / std::sqrt(2.0) / std::sqrt(2 * lambda);
  CHECK(std::abs(phi_at(es2, 0, d)) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("pointwise sigma and intervals") {
  const auto s = sample(6, 3);
  const auto fresh = sample(1, 4);
  const auto model = fit(s.x, s.y, fixed_config(0.05, 0.1));
  const auto es = eigen_system(model);
  const auto pw = prediction_weights(model, fresh.x[0]);
  const double n = 6.0, eps_n = 0.05 / 6.0;

  CHECK(pointwise_sigma(model, es, 0.0, pw.d_x) == 0.0);

  double series = 0.0;
  for (Eigen::Index j = 0; j < es.retained(); ++j) {
    const double lam = es.lambdas(j);
    const double phi = es.coords.col(j).dot(pw.d_x);
    series += lam * phi * phi / ((lam + eps_n) * (lam + eps_n));
  }
  CHECK(pointwise_sigma(model, es, 0.7, pw.d_x) == doctest::Approx(std::sqrt(0.7 * series / n)).epsilon(1e-12));

  EigenSystem one = es;
  one.lambdas = es.lambdas.head(1);
  one.coords = es.coords.leftCols(1);
  const double lam = one.lambdas(0), phi = one.coords.col(0).dot(pw.d_x);
  CHECK(pointwise_sigma(model, one, 0.7, pw.d_x) ==
        doctest::Approx(std::sqrt(0.7 * lam * phi * phi / (n * (lam + eps_n) * (lam + eps_n)))).epsilon(1e-12));

  const GridPredictor pred(model, sim::master_grid());
  const auto resid = residual_model(model, pred);
  CHECK(pointwise_halfwidths(model, es, resid, pw.d_x, 1.0).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd h05 = pointwise_halfwidths(model, es, resid, pw.d_x, 0.05);
  const Eigen::VectorXd h50 = pointwise_halfwidths(model, es, resid, pw.d_x, 0.5);
  CHECK((h05.array() >= h50.array()).all());
  for (Eigen::Index g = 0; g < h05.size(); ++g)
    CHECK(h05(g) == doctest::Approx(oracle::std_normal_quantile(0.975) * pointwise_sigma(model, es, resid.u2(g), pw.d_x)).epsilon(1e-9));
  // width increases with u2 at fixed t
  CHECK(pointwise_sigma(model, es, 2.0, pw.d_x) > pointwise_sigma(model, es, 1.0, pw.d_x));
  CHECK_THROWS_AS(pointwise_halfwidths(model, es, resid, pw.d_x, 0.0), ValidationError);
}

TEST_CASE("residual model") {
  const auto s = sample(8, 13);
  const auto model = fit(s.x, s.y, fixed_config(0.05, 0.1));
  const GridPredictor pred(model, sim::master_grid());
  const auto r = residual_model(model, pred);
  const Eigen::MatrixXd a = fitted_value_weights(model.gx(), model.epsilon_x());
  const Eigen::MatrixXd want = pred.y_values() - a * pred.y_values();
  CHECK((r.residuals - want).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((r.sigma_uu.diagonal() - r.u2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.sigma_uu - r.sigma_uu.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.sigma_uu);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
}

TEST_CASE("s_n: definition and plug-in identity") {
  const auto s = sample(3, 21);
  const auto fresh = sample(1, 22);
  const auto model = fit(s.x, s.y, fixed_config(0.05, 0.1));
  const auto pw = prediction_weights(model, fresh.x[0]);
  CHECK(s_n_hat(pw) == doctest::Approx(std::sqrt(pw.w.squaredNorm())).epsilon(1e-15));

  // <V G_i, G_x> computed directly in operator coordinates: V = (n^-1 Phi Phi^* + eps_n)^-1,
  // so <V G_i, G_x> = e_i^T (n^-1 G + eps_n I)^-1 G c_x with eps_n = eps_X / n.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + trial;
    const Eigen::MatrixXd gx = random_gx(n, rng);
    const double eps = 0.1;
    Eigen::VectorXd c = Eigen::VectorXd::Random(n);
    c.array() -= c.mean();
    const Eigen::VectorXd w = gx * oracle::inverse(gx + eps * Eigen::MatrixXd::Identity(n, n)) * c;
    const Eigen::VectorXd op = oracle::inverse(gx / n + (eps / n) * Eigen::MatrixXd::Identity(n, n)) * gx * c;
    CHECK((op - n * w).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, op.cwiseAbs().maxCoeff()));
    const double plug_in = (1.0 / n) * (1.0 / n) * op.squaredNorm();
    CHECK(plug_in == doctest::Approx(w.squaredNorm()).epsilon(1e-8));
  }

  PredictionWeights zero;
  zero.w = Eigen::VectorXd::Zero(4);
  CHECK(s_n_hat(zero) == 0.0);
}

TEST_CASE("C(alpha): zero covariance, monotone in alpha, reference paths") {
  CHECK(simulate_c_alpha(Eigen::MatrixXd::Zero(4, 4), 0.05, 1000, 1) == 0.0);
  Eigen::MatrixXd cov(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) cov(i, j) = std::min(i, j) + 1.0;
  CHECK(simulate_c_alpha(cov, 0.05, 2000, 9) >= simulate_c_alpha(cov, 0.10, 2000, 9));
  CHECK(simulate_sup_norms(cov, 500, 3) == reference::simulate_sup_norms(cov, 500, 3));
  CHECK(simulate_sup_norms(cov, 500, 3) != simulate_sup_norms(cov, 500, 4));
  CHECK_THROWS_AS(simulate_c_alpha(cov, 0.05, 99, 1), ValidationError);
  CHECK_THROWS_AS(simulate_c_alpha(cov, 1.0, 1000, 1), ValidationError);
  CHECK_THROWS_AS(covariance_root(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
}

TEST_CASE("C(alpha) against the max of two independent half-normals") {
  const double sigma = 1.7;
  const std::size_t n_paths = 100000;
  const Eigen::MatrixXd cov = sigma * sigma * Eigen::MatrixXd::Identity(2, 2);
  const double c = simulate_c_alpha(cov, 0.05, n_paths, 2718);
  const double want = oracle::max_two_half_normals_quantile(0.05, sigma);
  const double se = std::sqrt(0.05 * 0.95 / n_paths) / oracle::max_two_half_normals_density(want, sigma);
  CHECK(std::abs(c - want) <= 3 * se);
}

TEST_CASE("upper_quantile order statistic") {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = 100 - i;
  CHECK(upper_quantile(v, 0.05) == 95.0);
  CHECK(upper_quantile(v, 0.5) == 50.0);
  CHECK_THROWS_AS(upper_quantile({}, 0.05), ValidationError);
}

TEST_CASE("bands: zero residuals give zero width; builder matches direct construction") {
  auto s = sample(10, 31);
  auto flat = s.y;
  for (auto& c : flat) c.values = flat[0].values, c.times = flat[0].times;
  const auto fresh = sample(3, 32);
  const auto model0 = fit(s.x, flat, fixed_config(0.05, 0.1));
  const auto b0 = simultaneous_band(model0, fresh.x[0], sim::master_grid(), 0.05, 1000, 1);
  CHECK(b0.band_halfwidth <= 1e-10);
  CHECK(b0.pointwise_halfwidth.cwiseAbs().maxCoeff() <= 1e-6);

  const auto big = sample(100, 41);
  const auto model = fit(big.x, big.y, default_fit_config(TimeKernelKind::GaussianRBF));
  const BandBuilder builder(model, sim::master_grid(), 0.05, 2000, 7);
  for (const auto& x0 : fresh.x) {
    const auto b = builder(x0);
    CHECK(b.band_halfwidth > 0.0);
    const auto direct = simultaneous_band(model, x0, sim::master_grid(), 0.05, 2000, 7);
    CHECK((direct.center - b.center).cwiseAbs().maxCoeff() == 0.0);
    CHECK(direct.band_halfwidth == b.band_halfwidth);
    CHECK((b.center - predict(model, x0, sim::master_grid())).cwiseAbs().maxCoeff() <= 1e-12);
  }
}
