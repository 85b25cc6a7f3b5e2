#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nlffr/funcdata.hpp"
#include "nlffr/rng.hpp"
#include "nlffr/regression.hpp"

namespace nlffr::sim {

enum class ResponseModel { Model1, Model2 };
enum class XGenerator { GRB, BMC };
enum class Design { Dense, Sparse };
// Inner product <X, nu_j> used by the response models when X is a BMC path.
//   Score: the standardized expansion coefficient, <X, nu_j> = a_j
//   Rkhs:  pairing of the Brownian RKHS, <X, nu_j> = (j - 1/2) pi a_j
//   L2:    <X, nu_j> = a_j / ((j - 1/2) pi)
enum class BmcPairing { Score, Rkhs, L2 };

std::string to_string(ResponseModel m);
std::string to_string(XGenerator g);
std::string to_string(Design d);
std::string to_string(BmcPairing p);
ResponseModel response_model_from_string(const std::string& s);
XGenerator x_generator_from_string(const std::string& s);
Design design_from_string(const std::string& s);
BmcPairing bmc_pairing_from_string(const std::string& s);

inline constexpr double kGrbGamma = 7.0;
inline constexpr int kGrbTerms = 5;
inline constexpr int kBmcTerms = 100;

// X(t) = sum_k a_k exp(-7 (t - t_k)^2)
struct GrbCovariate {
  std::array<double, kGrbTerms> coeffs{};
  std::array<double, kGrbTerms> anchors{};
  double operator()(double t) const;
};

// X(t) = sum_j sqrt(2) [(j - 1/2) pi]^-1 a_j sin((j - 1/2) pi t), j = 1..100
struct BmcCovariate {
  std::array<double, kBmcTerms> coeffs{};
  double operator()(double t) const;
};

using Covariate = std::variant<GrbCovariate, BmcCovariate>;

double evaluate(const Covariate& x, double t);

// Coefficients from `coeff_rng`, anchor times from `anchor_rng`.
GrbCovariate gen_x_grb(Engine& coeff_rng, Engine& anchor_rng);
BmcCovariate gen_x_bmc(Engine& coeff_rng);

// nu_j(t) = sqrt(2) sin((j - 1/2) pi t)
double nu(int j, double t);
// rho(t) = sum_{j=1..5} nu_j(t)
double rho(double t);

// Model 1: 1/(1 + exp(<X,b1>)) + <X,b2>^2;  Model 2: cos(<X,b3>).
// Under GRB b_j = k_T(., s_j) with s = (0.6, 0.9, 0.1); under BMC
// b_1 = nu_1, b_2 = 0, b_3 = nu_3.
double response_factor(ResponseModel model, const Covariate& x, BmcPairing pairing);

// E(Y | X)(t) = response_factor * rho(t)
std::vector<double> conditional_mean(ResponseModel model, const Covariate& x, BmcPairing pairing,
                                     std::span<const double> grid);

// Standard Brownian path on an increasing grid by cumulative Gaussian
// increments; the path starts at 0 at time 0.
std::vector<double> brownian_path(Engine& rng, std::span<const double> grid);

// Y(t) = E(Y|X)(t) + sigma eps(t) on the grid.
std::vector<double> gen_response(ResponseModel model, const Covariate& x, BmcPairing pairing,
                                 double sigma, Engine& noise_rng, std::span<const double> grid);

// (1..50)/50
std::vector<double> master_grid();
// 0 followed by the master grid; used for ISE and bands.
std::vector<double> evaluation_grid();

inline constexpr int kSparsePoints = 10;

// Dense keeps all master-grid points, Sparse a uniformly random sorted
// 10-subset.
ObservedCurve apply_design(std::string subject_id, std::span<const double> master,
                           std::span<const double> values, Design design, Engine& mask_rng);

struct ScenarioConfig {
  ResponseModel model = ResponseModel::Model2;
  XGenerator x_generator = XGenerator::GRB;
  TimeKernelKind fit_kernel = TimeKernelKind::GaussianRBF;
  double sigma = 0.1;
  Design design = Design::Dense;
  int n_train = 100;
  int n_test = 500;
  int n_reps = 50;
  std::uint64_t seed = 1;
  BmcPairing bmc_pairing = BmcPairing::Score;
  bool coverage = false;
  double alpha = 0.05;
  int n_paths = 10000;
  // Overrides the grids of default_fit_config(fit_kernel) when set.
  std::optional<FitConfig> fit_config;
};

// Throws ValidationError naming the first invalid field.
void validate(const ScenarioConfig& cfg);

struct ReplicationResult {
  double median_ise = 0.0;
  bool failed = false;
  std::string failure;
  double band_coverage = 0.0;       // fraction of test curves inside the band everywhere
  double pointwise_coverage = 0.0;  // fraction of (curve, t) inside the pointwise interval
  TuningReport tuning;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<ReplicationResult> reps;
  double median = 0.0;
  double iqr = 0.0;
  int failures = 0;
  std::optional<double> band_coverage;
  std::optional<double> pointwise_coverage;

  std::vector<double> ise_medians() const;
};

// One training/test draw.
struct Sample {
  std::vector<Covariate> covariates;
  std::vector<ObservedCurve> x;
  std::vector<ObservedCurve> y;
  std::vector<std::vector<double>> y_full;  // noisy responses on evaluation_grid()
};

Sample generate_sample(const ScenarioConfig& cfg, int count, std::uint64_t seed);

ReplicationResult run_replication(const ScenarioConfig& cfg, int rep);

// Replications run in parallel; every replication draws from its own
// substream of cfg.seed. Throws NumericalError when more than 5% of the
// replications fail.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

double median(std::vector<double> values);
// Third minus first quartile, linear interpolation between order statistics.
double iqr(std::vector<double> values);

}  // namespace nlffr::sim
