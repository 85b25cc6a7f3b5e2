#include <doctest.h>

#include <cmath>
#include <random>

#include "nlffr/errors.hpp"
#include "nlffr/funcdata.hpp"
#include "nlffr/reference.hpp"
#include "oracles.hpp"

using namespace nlffr;

namespace {

ObservedCurve curve(std::string id, std::vector<double> t, std::vector<double> v) {
  return {std::move(id), std::move(t), std::move(v)};
}

oracle::Curve as_oracle(const ObservedCurve& c) { return {c.times, c.values}; }

ObservedCurve random_curve(std::mt19937_64& rng, int m, const std::string& id) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  std::vector<double> t(static_cast<std::size_t>(m));
  for (auto& x : t) x = u(rng);
  std::sort(t.begin(), t.end());
  std::vector<double> v(t.size());
  for (auto& x : v) x = z(rng);
  return curve(id, t, v);
}

}  // namespace

TEST_CASE("validate rejects malformed curves") {
  CHECK_NOTHROW(validate(curve("a", {0.0, 1.0}, {1, 2})));
  CHECK_THROWS_AS(validate(curve("a", {}, {})), ValidationError);
  CHECK_THROWS_AS(validate(curve("a", {0.1, 0.2}, {1})), ValidationError);
  CHECK_THROWS_AS(validate(curve("a", {0.2, 0.1}, {1, 2})), ValidationError);
  CHECK_THROWS_AS(validate(curve("a", {0.2, 0.2}, {1, 2})), ValidationError);
  CHECK_THROWS_AS(validate(curve("a", {1.5}, {1})), ValidationError);
  CHECK_THROWS_AS(validate(curve("a", {-0.1}, {1})), ValidationError);
  CHECK_THROWS_AS(validate(curve("a", {0.5}, {NAN})), ValidationError);
}

TEST_CASE("recover: scalar and limiting cases") {
  const auto k = TimeKernel::gaussian(7.0);
  const auto rc = recover(curve("a", {0.5}, {2.0}), k, 1.0);
  CHECK(rc.coeffs()(0) == doctest::Approx(1.0).epsilon(1e-15));

  const auto c5 = curve("b", {0.1, 0.3, 0.5, 0.7, 0.9}, {1.0, -2.0, 0.5, 3.0, -1.0});
  const double vnorm = Eigen::Map<const Eigen::VectorXd>(c5.values.data(), 5).norm();
  const auto big = recover(c5, k, 1e6);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(std::abs(big.coeffs()(i)) <= vnorm / 1e6);

  CHECK_THROWS_AS(recover(c5, k, 0.0), ValidationError);
  CHECK_THROWS_AS(recover(curve("c", {0.5}, {NAN}), k, 1.0), ValidationError);
}

TEST_CASE("recover: coefficients match the dense-solver oracle") {
  const auto c5 = curve("b", {0.1, 0.3, 0.5, 0.7, 0.9}, {1.0, -2.0, 0.5, 3.0, -1.0});
  for (double gamma : {7.0, 0.0}) {
    const auto k = gamma > 0 ? TimeKernel::gaussian(gamma) : TimeKernel::brownian();
    const auto rc = recover(c5, k, 1e-4);
    const Eigen::VectorXd o = oracle::coeffs(as_oracle(c5), gamma, 1e-4);
    CHECK((rc.coeffs() - o).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, o.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("evaluate") {
  const auto k = TimeKernel::gaussian(7.0);
  const RecoveredCurve zero({0.2, 0.6}, Eigen::VectorXd::Zero(2), k, 1e-3);
  for (double t : {0.0, 0.3, 1.0}) CHECK(evaluate(zero, t) == 0.0);
  const RecoveredCurve one({0.5}, Eigen::VectorXd::Ones(1), k, 1e-3);
  CHECK(evaluate(one, 0.5) == 1.0);

  // A curve inside the kernel span is interpolated by a tiny ridge.
  std::vector<double> t;
  for (int i = 1; i <= 20; ++i) t.push_back(i / 20.0);
  std::vector<double> v;
  for (double s : t) v.push_back(1.5 * k(s, 0.3) - 0.7 * k(s, 0.8));
  const auto rc = recover(curve("a", t, v), TimeKernel::gaussian(7.0), 1e-8);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(rc(t[i]) - v[i]) <= 1e-4);
}

TEST_CASE("hx_inner") {
  const auto k = TimeKernel::gaussian(7.0);
  const double eps = 0.3;
  const auto a = recover(curve("a", {0.4}, {2.0}), k, eps);
  const auto b = recover(curve("b", {0.4}, {-3.0}), k, eps);
  CHECK(hx_inner(a, b) == doctest::Approx(2.0 * -3.0 / ((1 + eps) * (1 + eps))).epsilon(1e-14));

  const RecoveredCurve zero({0.2, 0.6}, Eigen::VectorXd::Zero(2), k, eps);
  CHECK(hx_inner(a, zero) == 0.0);

  const auto c1 = curve("c1", {0.05, 0.3, 0.55, 0.9}, {0.3, 1.2, -0.4, 0.8});
  const auto c2 = curve("c2", {0.1, 0.2, 0.6, 0.95}, {-1.0, 0.5, 0.25, 2.0});
  for (double gamma : {7.0, 0.0}) {
    const auto kern = gamma > 0 ? TimeKernel::gaussian(gamma) : TimeKernel::brownian();
    const double got = hx_inner(recover(c1, kern, 1e-3), recover(c2, kern, 1e-3));
    const double want = oracle::inner(as_oracle(c1), as_oracle(c2), gamma, 1e-3);
    CHECK(std::abs(got - want) <= 1e-8 * std::max(1.0, std::abs(want)));
  }

  CHECK_THROWS_AS(hx_inner(a, recover(curve("x", {0.4}, {1.0}), TimeKernel::brownian(), eps)),
                  ValidationError);
}

TEST_CASE("hx_gram: symmetric, PSD, equal to the serial reference") {
  std::mt19937_64 rng(11);
  std::vector<RecoveredCurve> curves;
  for (int i = 0; i < 25; ++i) curves.push_back(recover(random_curve(rng, 3 + i % 7, "s"), TimeKernel::gaussian(5.0), 1e-3));
  const Eigen::MatrixXd h = hx_gram(curves);
  const Eigen::MatrixXd r = reference::hx_gram(curves);
  CHECK((h - h.transpose()).norm() == 0.0);
  CHECK((h - r).cwiseAbs().maxCoeff() <= 1e-12 * r.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  CHECK(es.eigenvalues().minCoeff() >= -1e-9 * es.eigenvalues().maxCoeff());
}

TEST_CASE("EvalTable lookups") {
  const auto k = TimeKernel::gaussian(2.0);
  std::vector<RecoveredCurve> curves{recover(curve("a", {0.1, 0.5}, {1, 2}), k, 1e-2),
                                     recover(curve("b", {0.5, 0.9}, {-1, 0}), k, 1e-2)};
  const EvalTable table(curves, union_times(curves));
  CHECK(table.times() == std::vector<double>{0.1, 0.5, 0.9});
  REQUIRE(table.column(0.5).has_value());
  CHECK(*table.column(0.5) == 1);
  CHECK_FALSE(table.column(0.3).has_value());
  CHECK(table.values()(1, 2) == curves[1](0.9));
  const auto other = recover(curve("c", {0.3, 0.9}, {2, 1}), k, 1e-2);
  const Eigen::VectorXd col = hx_inner_column(table, curves, other);
  for (int i = 0; i < 2; ++i) CHECK(col(i) == doctest::Approx(hx_inner(curves[i], other)).epsilon(1e-13));
}

TEST_CASE("GCV smoothing: single grid point and selection") {
  const std::vector<ObservedCurve> cs{curve("a", {0.2, 0.7}, {1.0, -0.5})};
  const std::vector<double> eps{1e-2};
  const std::vector<double> gam{3.0};
  const auto choice = gcv_smoothing(cs, TimeKernelKind::GaussianRBF, eps, gam);
  CHECK(choice.epsilon == 1e-2);
  CHECK(choice.gamma == 3.0);
  CHECK(choice.gcv_score == doctest::Approx(oracle::smoothing_gcv({as_oracle(cs[0])}, 3.0, 1e-2)).epsilon(1e-10));

  const auto bmc = gcv_smoothing(cs, TimeKernelKind::BrownianCovariance, eps, gam);
  CHECK(bmc.gamma == 0.0);

  CHECK_THROWS_AS(gcv_smoothing(cs, TimeKernelKind::GaussianRBF, std::vector<double>{}, gam),
                  ValidationError);
  CHECK_THROWS_AS(gcv_smoothing(cs, TimeKernelKind::GaussianRBF, eps, std::vector<double>{-1.0}),
                  ValidationError);
}

TEST_CASE("GCV smoothing: scores match the displayed formula") {
  std::mt19937_64 rng(5);
  std::vector<ObservedCurve> cs{curve("a", {0.25, 0.75}, {0.4, -1.1})};
  for (int i = 0; i < 6; ++i) cs.push_back(random_curve(rng, 2 + i, "r"));
  cs.push_back(curve("dup", cs[2].times, {0.3, 0.1, -0.2}));
  std::vector<oracle::Curve> oc;
  for (const auto& c : cs) oc.push_back(as_oracle(c));
  const auto eps = default_smoothing_eps_grid();
  const auto gam = default_smoothing_gamma_grid();
  const auto scores = gcv_smoothing_scores(cs, TimeKernelKind::GaussianRBF, eps, gam);
  REQUIRE(scores.size() == eps.size() * gam.size());
  const auto ref = reference::gcv_smoothing_scores(cs, TimeKernelKind::GaussianRBF, eps, gam);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double want = oracle::smoothing_gcv(oc, scores[i].gamma, scores[i].epsilon);
    CHECK(scores[i].score == doctest::Approx(want).epsilon(1e-7));
    CHECK(ref[i].score == doctest::Approx(want).epsilon(1e-7));
  }
  const auto bscores = gcv_smoothing_scores(cs, TimeKernelKind::BrownianCovariance, eps, gam);
  REQUIRE(bscores.size() == eps.size());
  for (const auto& s : bscores) CHECK(s.score == doctest::Approx(oracle::smoothing_gcv(oc, 0.0, s.epsilon)).epsilon(1e-7));
}

TEST_CASE("select_smoothing tie-breaking and failure") {
  const std::vector<SmoothingScore> tie{{1e-2, 5.0, 1.0}, {1e-3, 7.0, 1.0}, {1e-3, 2.0, 1.0}, {1e-1, 1.0, 2.0}};
  const auto c = select_smoothing(tie);
  CHECK(c.epsilon == 1e-3);
  CHECK(c.gamma == 2.0);
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<SmoothingScore> bad{{1e-2, 5.0, inf}, {1e-3, 5.0, NAN}};
  CHECK_THROWS_AS(select_smoothing(bad), NumericalError);
}

TEST_CASE("GCV smoothing on pure noise avoids the smallest ridge") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z;
  const auto eps = default_smoothing_eps_grid();
  const auto gam = default_smoothing_gamma_grid();
  int avoided = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ObservedCurve> cs;
    for (int i = 0; i < 20; ++i) {
      std::vector<double> t, v;
      for (int j = 1; j <= 20; ++j) {
        t.push_back(j / 20.0);
        v.push_back(z(rng));
      }
      cs.push_back(curve("n", t, v));
    }
    avoided += gcv_smoothing(cs, TimeKernelKind::GaussianRBF, eps, gam).epsilon != eps.front();
  }
  CHECK(avoided >= 40);
}
