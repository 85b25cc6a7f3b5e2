#include <doctest.h>

#include <random>

#include "nlffr/inference.hpp"
#include "nlffr/io.hpp"
#include "nlffr/parallel.hpp"
#include "nlffr/reference.hpp"
#include "nlffr/sim.hpp"

using namespace nlffr;

namespace {

const int kThreadCounts[] = {1, 2, 3, 8};

struct RestoreThreads {
  ~RestoreThreads() { set_num_threads(0); }
};

sim::Sample sample(int n, std::uint64_t seed, sim::Design design = sim::Design::Dense) {
  sim::ScenarioConfig cfg;
  cfg.design = design;
  return sim::generate_sample(cfg, n, seed);
}

}  // namespace

TEST_CASE("set_num_threads") {
  RestoreThreads restore;
  set_num_threads(2);
  CHECK(max_threads() == 2);
  set_num_threads(0);
  CHECK(max_threads() >= 1);
}

TEST_CASE("parallel kernels agree with serial references") {
  const auto s = sample(40, 3, sim::Design::Sparse);
  std::vector<RecoveredCurve> curves;
  for (const auto& c : s.x) curves.push_back(recover(c, TimeKernel::gaussian(7.0), 1e-3));
  const Eigen::MatrixXd h = hx_gram(curves);
  const Eigen::MatrixXd hr = reference::hx_gram(curves);
  CHECK((h - hr).cwiseAbs().maxCoeff() <= 1e-12 * hr.cwiseAbs().maxCoeff());

  const std::vector<double> eps{1e-4, 1e-2}, gam{2.0, 7.0};
  const auto sc = gcv_smoothing_scores(s.y, TimeKernelKind::GaussianRBF, eps, gam);
  const auto sr = reference::gcv_smoothing_scores(s.y, TimeKernelKind::GaussianRBF, eps, gam);
  REQUIRE(sc.size() == sr.size());
  for (std::size_t i = 0; i < sc.size(); ++i) {
    CHECK(sc[i].epsilon == sr[i].epsilon);
    CHECK(sc[i].gamma == sr[i].gamma);
    CHECK(sc[i].score == doctest::Approx(sr[i].score).epsilon(1e-9));
  }

  Eigen::MatrixXd cov(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) cov(i, j) = std::exp(-std::abs(i - j) / 3.0);
  CHECK(simulate_sup_norms(cov, 3000, 17) == reference::simulate_sup_norms(cov, 3000, 17));
}

TEST_CASE("results do not depend on the thread count") {
  RestoreThreads restore;
  const auto train = sample(30, 5);
  const auto fresh = sample(4, 6);
  sim::ScenarioConfig scen;
  scen.n_reps = 3;
  scen.n_train = 25;
  scen.n_test = 20;
  scen.coverage = true;
  scen.n_paths = 300;
  scen.seed = 99;

  std::string model_json, summary, reps;
  std::vector<Eigen::VectorXd> preds;
  std::vector<double> widths;
  std::vector<double> sups;
  bool first = true;
  for (int threads : kThreadCounts) {
    set_num_threads(threads);
    const auto model = fit(train.x, train.y, default_fit_config(TimeKernelKind::GaussianRBF));
    const BandBuilder bands(model, sim::master_grid(), 0.05, 500, 3);
    std::vector<Eigen::VectorXd> p;
    std::vector<double> w;
    for (const auto& x : fresh.x) {
      const auto b = bands(x);
      p.push_back(b.center);
      w.push_back(b.band_halfwidth);
    }
    const auto r = sim::run_scenario(scen);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(5, 5);
    cov(0, 1) = cov(1, 0) = 0.5;
    const auto s = simulate_sup_norms(cov, 2000, 4);
    if (first) {
      model_json = io::model_to_json(model);
      summary = io::scenario_summary_csv({r});
      reps = io::scenario_reps_csv({r});
      preds = p;
      widths = w;
      sups = s;
      first = false;
      continue;
    }
    INFO("threads = " << threads);
    CHECK(io::model_to_json(model) == model_json);
    CHECK(io::scenario_summary_csv({r}) == summary);
    CHECK(io::scenario_reps_csv({r}) == reps);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(p[k] == preds[k]);
    CHECK(w == widths);
    CHECK(s == sups);
  }
}
