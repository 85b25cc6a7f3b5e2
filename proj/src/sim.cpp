#include "nlffr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nlffr/errors.hpp"
#include "nlffr/inference.hpp"

namespace nlffr::sim {

std::string to_string(ResponseModel m) { return m == ResponseModel::Model1 ? "model1" : "model2"; }
std::string to_string(XGenerator g) { return g == XGenerator::GRB ? "grb" : "bmc"; }
std::string to_string(Design d) { return d == Design::Dense ? "dense" : "sparse"; }
std::string to_string(BmcPairing p) {
  switch (p) {
    case BmcPairing::Score: return "score";
    case BmcPairing::Rkhs: return "rkhs";
    case BmcPairing::L2: return "l2";
  }
  return "score";
}

ResponseModel response_model_from_string(const std::string& s) {
  if (s == "model1" || s == "1") return ResponseModel::Model1;
  if (s == "model2" || s == "2") return ResponseModel::Model2;
  throw ValidationError("model: unknown response model '" + s + "' (expected model1 or model2)");
}

XGenerator x_generator_from_string(const std::string& s) {
  if (s == "grb" || s == "GRB") return XGenerator::GRB;
  if (s == "bmc" || s == "BMC") return XGenerator::BMC;
  throw ValidationError("x_generator: unknown generator '" + s + "' (expected grb or bmc)");
}

Design design_from_string(const std::string& s) {
  if (s == "dense") return Design::Dense;
  if (s == "sparse") return Design::Sparse;
  throw ValidationError("design: unknown design '" + s + "' (expected dense or sparse)");
}

BmcPairing bmc_pairing_from_string(const std::string& s) {
  if (s == "score") return BmcPairing::Score;
  if (s == "rkhs") return BmcPairing::Rkhs;
  if (s == "l2") return BmcPairing::L2;
  throw ValidationError("bmc_pairing: unknown pairing '" + s + "' (expected score, rkhs or l2)");
}

namespace {
constexpr double kPi = std::numbers::pi;
constexpr std::array<double, 3> kGrbDirections{0.6, 0.9, 0.1};

double kl_frequency(int j) { return (j - 0.5) * kPi; }
}  // namespace

double GrbCovariate::operator()(double t) const {
  double s = 0.0;
  for (int k = 0; k < kGrbTerms; ++k) {
    const double d = t - anchors[k];
    s += coeffs[k] * std::exp(-kGrbGamma * d * d);
  }
  return s;
}

double BmcCovariate::operator()(double t) const {
  double s = 0.0;
  for (int j = 1; j <= kBmcTerms; ++j) {
    const double w = kl_frequency(j);
    s += std::numbers::sqrt2 / w * coeffs[j - 1] * std::sin(w * t);
  }
  return s;
}

double evaluate(const Covariate& x, double t) {
  return std::visit([t](const auto& c) { return c(t); }, x);
}

GrbCovariate gen_x_grb(Engine& coeff_rng, Engine& anchor_rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  GrbCovariate x;
  for (auto& a : x.coeffs) a = normal(coeff_rng);
  for (auto& t : x.anchors) t = uniform(anchor_rng);
  return x;
}

BmcCovariate gen_x_bmc(Engine& coeff_rng) {
  std::normal_distribution<double> normal;
  BmcCovariate x;
  for (auto& a : x.coeffs) a = normal(coeff_rng);
  return x;
}

double nu(int j, double t) { return std::numbers::sqrt2 * std::sin(kl_frequency(j) * t); }

double rho(double t) {
  double s = 0.0;
  for (int j = 1; j <= 5; ++j) s += nu(j, t);
  return s;
}

namespace {

// <X, b_j>, j = 1..3
double direction(const Covariate& x, int j, BmcPairing pairing) {
  if (const auto* g = std::get_if<GrbCovariate>(&x)) {
    // Reproducing property: <X, k_T(., s)> = X(s).
    return (*g)(kGrbDirections[static_cast<std::size_t>(j - 1)]);
  }
  if (j == 2) return 0.0;
  const auto& b = std::get<BmcCovariate>(x);
  const double a = b.coeffs[static_cast<std::size_t>(j - 1)];
  switch (pairing) {
    case BmcPairing::Score: return a;
    case BmcPairing::Rkhs: return kl_frequency(j) * a;
    case BmcPairing::L2: return a / kl_frequency(j);
  }
  return a;
}

}  // namespace

double response_factor(ResponseModel model, const Covariate& x, BmcPairing pairing) {
  if (model == ResponseModel::Model1) {
    const double b2 = direction(x, 2, pairing);
    return 1.0 / (1.0 + std::exp(direction(x, 1, pairing))) + b2 * b2;
  }
  return std::cos(direction(x, 3, pairing));
}

std::vector<double> conditional_mean(ResponseModel model, const Covariate& x, BmcPairing pairing,
                                     std::span<const double> grid) {
  const double f = response_factor(model, x, pairing);
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = f * rho(grid[k]);
  return out;
}

std::vector<double> brownian_path(Engine& rng, std::span<const double> grid) {
  std::normal_distribution<double> normal;
  std::vector<double> w(grid.size());
  double prev_t = 0.0;
  double level = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double dt = grid[k] - prev_t;
    if (dt < 0.0) throw ValidationError("Brownian path grid must be increasing and start at >= 0");
    if (dt > 0.0) level += std::sqrt(dt) * normal(rng);
    w[k] = level;
    prev_t = grid[k];
  }
  return w;
}

std::vector<double> gen_response(ResponseModel model, const Covariate& x, BmcPairing pairing,
                                 double sigma, Engine& noise_rng, std::span<const double> grid) {
  for (double t : grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("response grid must lie in [0,1]");
  }
  std::vector<double> y = conditional_mean(model, x, pairing, grid);
  const std::vector<double> eps = brownian_path(noise_rng, grid);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += sigma * eps[k];
  return y;
}

std::vector<double> master_grid() {
  std::vector<double> g(50);
  for (int k = 0; k < 50; ++k) g[static_cast<std::size_t>(k)] = (k + 1) / 50.0;
  return g;
}

std::vector<double> evaluation_grid() {
  std::vector<double> g{0.0};
  const auto m = master_grid();
  g.insert(g.end(), m.begin(), m.end());
  return g;
}

ObservedCurve apply_design(std::string subject_id, std::span<const double> master,
                           std::span<const double> values, Design design, Engine& mask_rng) {
  if (master.size() != values.size()) throw ValidationError("design: grid and values differ in length");
  ObservedCurve c;
  c.subject_id = std::move(subject_id);
  if (design == Design::Dense || master.size() <= static_cast<std::size_t>(kSparsePoints)) {
    c.times.assign(master.begin(), master.end());
    c.values.assign(values.begin(), values.end());
    return c;
  }
  std::vector<std::size_t> idx(master.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  // Partial Fisher-Yates: the first kSparsePoints entries form a uniform subset.
  for (std::size_t k = 0; k < static_cast<std::size_t>(kSparsePoints); ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(mask_rng)]);
  }
  idx.resize(kSparsePoints);
  std::sort(idx.begin(), idx.end());
  for (std::size_t k : idx) {
    c.times.push_back(master[k]);
    c.values.push_back(values[k]);
  }
  return c;
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.n_train < 2) throw ValidationError("n_train: must be at least 2");
  if (cfg.n_test < 1) throw ValidationError("n_test: must be positive");
  if (cfg.n_reps < 1) throw ValidationError("n_reps: must be positive");
  if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) throw ValidationError("sigma: must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("alpha: must lie in (0, 1)");
  if (cfg.coverage && cfg.n_paths < 100) throw ValidationError("n_paths: must be at least 100");
}

Sample generate_sample(const ScenarioConfig& cfg, int count, std::uint64_t seed) {
  Engine coeff_rng = make_engine(seed, "x-coefficients");
  Engine anchor_rng = make_engine(seed, "x-anchors");
  Engine noise_rng = make_engine(seed, "noise");
  Engine mask_rng = make_engine(seed, "sparsity-mask");
  const auto master = master_grid();
  const auto eval = evaluation_grid();

  Sample s;
  for (int i = 0; i < count; ++i) {
    Covariate x = cfg.x_generator == XGenerator::GRB ? Covariate(gen_x_grb(coeff_rng, anchor_rng))
                                                     : Covariate(gen_x_bmc(coeff_rng));
    std::vector<double> xv(master.size());
    for (std::size_t k = 0; k < master.size(); ++k) xv[k] = evaluate(x, master[k]);
    std::vector<double> y = gen_response(cfg.model, x, cfg.bmc_pairing, cfg.sigma, noise_rng, eval);
    const std::span<const double> y_master(y.data() + 1, master.size());
    const std::string id = "s" + std::to_string(i);
    s.x.push_back(apply_design(id, master, xv, cfg.design, mask_rng));
    s.y.push_back(apply_design(id, master, y_master, cfg.design, mask_rng));
    s.y_full.push_back(std::move(y));
    s.covariates.push_back(std::move(x));
  }
  return s;
}

ReplicationResult run_replication(const ScenarioConfig& cfg, int rep) {
  const std::uint64_t rep_seed = derive_seed(cfg.seed, "replication", static_cast<std::uint64_t>(rep));
  const Sample train = generate_sample(cfg, cfg.n_train, derive_seed(rep_seed, "train"));
  const Sample test = generate_sample(cfg, cfg.n_test, derive_seed(rep_seed, "test"));
  const FitConfig fit_cfg = cfg.fit_config ? *cfg.fit_config : default_fit_config(cfg.fit_kernel);

  ReplicationResult r;
  try {
    const FittedModel model = fit(train.x, train.y, fit_cfg);
    r.tuning = model.report();
    const auto eval = evaluation_grid();
    const GridPredictor predictor(model, eval);
    std::optional<BandBuilder> bands;
    if (cfg.coverage) {
      bands.emplace(model, master_grid(), cfg.alpha, static_cast<std::size_t>(cfg.n_paths),
                    derive_seed(rep_seed, "band"));
    }
    const auto n_test = static_cast<std::ptrdiff_t>(cfg.n_test);
    std::vector<double> ises(static_cast<std::size_t>(n_test));
    std::vector<double> band_hit(ises.size(), 0.0);
    std::vector<double> pw_hit(ises.size(), 0.0);
    std::vector<std::string> errors(ises.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < n_test; ++s) {
      const auto k = static_cast<std::size_t>(s);
      try {
      const PredictionWeights pw = prediction_weights(model, test.x[k]);
      const Eigen::VectorXd yhat = predictor(pw);
      ises[k] = ise(std::span<const double>(yhat.data(), static_cast<std::size_t>(yhat.size())),
                    test.y_full[k], eval);
      if (bands) {
        const BandResult b = (*bands)(pw);
        const auto truth = conditional_mean(cfg.model, test.covariates[k], cfg.bmc_pairing, b.grid);
        bool inside = true;
        double pw_in = 0.0;
        for (std::size_t g = 0; g < truth.size(); ++g) {
          const double err = std::abs(b.center[static_cast<Eigen::Index>(g)] - truth[g]);
          if (err > b.band_halfwidth) inside = false;
          if (err <= b.pointwise_halfwidth[static_cast<Eigen::Index>(g)]) pw_in += 1.0;
        }
        band_hit[k] = inside ? 1.0 : 0.0;
        pw_hit[k] = pw_in / static_cast<double>(truth.size());
      }
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw NumericalError("test prediction failed: " + e);
    }
    r.median_ise = median(ises);
    if (cfg.coverage) {
      double b = 0.0, p = 0.0;
      for (std::size_t k = 0; k < ises.size(); ++k) {
        b += band_hit[k];
        p += pw_hit[k];
      }
      r.band_coverage = b / static_cast<double>(ises.size());
      r.pointwise_coverage = p / static_cast<double>(ises.size());
    }
  } catch (const NumericalError& e) {
    r.failed = true;
    r.failure = e.what();
  }
  return r;
}

std::vector<double> ScenarioResult::ise_medians() const {
  std::vector<double> out;
  for (const auto& r : reps) {
    if (!r.failed) out.push_back(r.median_ise);
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  ScenarioResult result;
  result.config = cfg;
  result.reps.resize(static_cast<std::size_t>(cfg.n_reps));
  const auto n_reps = static_cast<std::ptrdiff_t>(cfg.n_reps);
  std::vector<std::string> errors(result.reps.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t rep = 0; rep < n_reps; ++rep) {
    try {
      result.reps[static_cast<std::size_t>(rep)] = run_replication(cfg, static_cast<int>(rep));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(rep)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw ValidationError(e);
  }
  for (const auto& r : result.reps) result.failures += r.failed ? 1 : 0;
  if (result.failures > 0.05 * cfg.n_reps) {
    throw NumericalError(std::to_string(result.failures) + " of " + std::to_string(cfg.n_reps) +
                         " replications failed (limit 5%); first: " +
                         std::find_if(result.reps.begin(), result.reps.end(),
                                      [](const auto& r) { return r.failed; })->failure);
  }
  const auto medians = result.ise_medians();
  result.median = median(medians);
  result.iqr = iqr(medians);
  if (cfg.coverage) {
    double b = 0.0, p = 0.0;
    for (const auto& r : result.reps) {
      if (r.failed) continue;
      b += r.band_coverage;
      p += r.pointwise_coverage;
    }
    result.band_coverage = b / static_cast<double>(medians.size());
    result.pointwise_coverage = p / static_cast<double>(medians.size());
  }
  return result;
}

namespace {

double quantile7(std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty sample");
  std::sort(values.begin(), values.end());
  return quantile7(values, 0.5);
}

double iqr(std::vector<double> values) {
  if (values.empty()) throw ValidationError("IQR of an empty sample");
  std::sort(values.begin(), values.end());
  return quantile7(values, 0.75) - quantile7(values, 0.25);
}

}  // namespace nlffr::sim
