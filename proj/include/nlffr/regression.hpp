#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlffr/funcdata.hpp"
#include "nlffr/kernels.hpp"

namespace nlffr {

// How second-layer gamma grid values are interpreted. With MedianHeuristic a
// grid value v means gamma_x = v / median_{i<j} ||X_i - X_j||^2, which keeps
// the grid meaningful whatever the scale of the first-layer norms.
enum class GammaScale { Absolute, MedianHeuristic };

std::string to_string(GammaScale scale);
GammaScale gamma_scale_from_string(const std::string& name);

struct SmoothingConfig {
  TimeKernelKind kernel = TimeKernelKind::GaussianRBF;
  std::vector<double> eps_grid = default_smoothing_eps_grid();
  std::vector<double> gamma_grid = default_smoothing_gamma_grid();
  // Use the single (eps, gamma) pair given by the grids and skip GCV.
  bool fixed = false;
};

struct RegressionTuning {
  std::vector<double> eps_grid;
  std::vector<double> gamma_grid;
  GammaScale gamma_scale = GammaScale::MedianHeuristic;
  bool fixed = false;
};

std::vector<double> default_regression_eps_grid();
std::vector<double> default_regression_gamma_grid();

struct FitConfig {
  SmoothingConfig x;
  SmoothingConfig y;
  RegressionTuning regression{default_regression_eps_grid(), default_regression_gamma_grid()};
};

// Same first-layer kernel family on both sides, default grids everywhere.
FitConfig default_fit_config(TimeKernelKind kind);

struct RegressionScore {
  double epsilon;
  double gamma;       // actual second-layer gamma
  double grid_value;  // the gamma grid entry it came from
  double score;       // +inf for a degenerate denominator
};

struct RegressionChoice {
  double epsilon_x = 0.0;
  double gamma_x = 0.0;
  double grid_value = 0.0;
  double gcv_score = 0.0;
};

struct TuningReport {
  SmoothingChoice x;
  SmoothingChoice y;
  RegressionChoice regression;
  bool x_fixed = false;
  bool y_fixed = false;
  bool regression_fixed = false;
  GammaScale gamma_scale = GammaScale::MedianHeuristic;
  // Median pairwise squared H_X distance (1 for absolute gamma grids).
  double gamma_reference = 1.0;
};

// K_X(i,j) = kappa(X_i, X_j) from the first-layer inner-product matrix.
Eigen::MatrixXd second_layer_gram(const Eigen::MatrixXd& hx_gram, const SecondLayerKernel& kernel);

// Q K Q with Q = I - 11^T/n.
Eigen::MatrixXd center_gram(const Eigen::MatrixXd& gram);

double median_squared_distance(const Eigen::MatrixXd& hx_gram);

// Hat matrix of the training fit: A = G (G + eps I)^-1 + 11^T/n, so that
// Yhat_i = sum_k A_ik Y_k.
Eigen::MatrixXd fitted_value_weights(const Eigen::MatrixXd& gx, double epsilon_x);

// GCV(eps, gamma) = n^-1 sum_i ||Y_i - Yhat_i||^2_{H_Y} / [1 - tr(A)/n]^2 for every
// grid pair (gamma-major).
std::vector<RegressionScore> regression_gcv_scores(const Eigen::MatrixXd& hx_gram,
                                                   const Eigen::MatrixXd& ky_inner,
                                                   const RegressionTuning& tuning);

// Ties go to smaller epsilon, then smaller gamma.
RegressionChoice select_regression(std::span<const RegressionScore> scores);

RegressionChoice gcv_regression(const Eigen::MatrixXd& hx_gram, const Eigen::MatrixXd& ky_inner,
                                const RegressionTuning& tuning);

class FittedModel {
 public:
  // Everything a model artifact stores. Factorizations and lookup tables are
  // rebuilt from these deterministically.
  struct Parts {
    std::vector<std::string> subject_ids;
    std::vector<RecoveredCurve> x_curves;
    std::vector<RecoveredCurve> y_curves;
    Eigen::MatrixXd hx_gram;
    Eigen::MatrixXd kx;
    Eigen::MatrixXd gx;
    Eigen::MatrixXd ky_inner;
    double epsilon_x = 0.0;
    double gamma_x = 0.0;
    TuningReport report;
  };

  explicit FittedModel(Parts parts);

  // Builds hx_gram, K_X, G_X and ky_inner from recovered curves.
  static FittedModel assemble(std::vector<std::string> subject_ids,
                              std::vector<RecoveredCurve> x_curves,
                              std::vector<RecoveredCurve> y_curves, double epsilon_x,
                              double gamma_x, TuningReport report);

  const Parts& parts() const { return parts_; }
  Eigen::Index n() const { return static_cast<Eigen::Index>(parts_.x_curves.size()); }
  const std::vector<RecoveredCurve>& x_curves() const { return parts_.x_curves; }
  const std::vector<RecoveredCurve>& y_curves() const { return parts_.y_curves; }
  const Eigen::MatrixXd& hx_gram() const { return parts_.hx_gram; }
  const Eigen::MatrixXd& kx() const { return parts_.kx; }
  const Eigen::MatrixXd& gx() const { return parts_.gx; }
  const Eigen::MatrixXd& ky_inner() const { return parts_.ky_inner; }
  double epsilon_x() const { return parts_.epsilon_x; }
  double gamma_x() const { return parts_.gamma_x; }
  const TuningReport& report() const { return parts_.report; }

  const TimeKernel& x_kernel() const { return parts_.x_curves.front().kernel(); }
  const TimeKernel& y_kernel() const { return parts_.y_curves.front().kernel(); }
  // Ridge used to recover new covariates; equal to the training X ridge.
  double x_smoothing_epsilon() const { return parts_.x_curves.front().epsilon(); }

  // Training average of kappa(X_i, X_l) over l.
  const Eigen::VectorXd& kx_row_means() const { return kx_row_means_; }
  const EvalTable& x_table() const { return x_table_; }

  Eigen::VectorXd solve_gx(const Eigen::VectorXd& rhs) const { return g_solver_.solve(rhs); }
  Eigen::VectorXd solve_kx(const Eigen::VectorXd& rhs) const { return k_solver_.solve(rhs); }

 private:
  Parts parts_;
  Eigen::LLT<Eigen::MatrixXd> g_solver_;  // G_X + eps_X I
  Eigen::LLT<Eigen::MatrixXd> k_solver_;  // K_X + eps_X I
  Eigen::VectorXd kx_row_means_;
  EvalTable x_table_;
};

// x and y are paired by subject_id. Throws ValidationError for unpaired
// subjects, n < 2 or invalid curves.
FittedModel fit(std::span<const ObservedCurve> x, std::span<const ObservedCurve> y,
                const FitConfig& config);

struct PredictionWeights {
  Eigen::VectorXd d_x;  // kappa(X_i, x) - E_n kappa(X_i, X)
  Eigen::VectorXd c_x;  // Q (K_X + eps I)^-1 d_x
  Eigen::VectorXd w;    // G_X (G_X + eps I)^-1 c_x
};

RecoveredCurve recover_covariate(const FittedModel& model, const ObservedCurve& x0);
Eigen::VectorXd d_vector(const FittedModel& model, const RecoveredCurve& x0);
PredictionWeights weights_from_d(const FittedModel& model, Eigen::VectorXd d_x);
PredictionWeights prediction_weights(const FittedModel& model, const ObservedCurve& x0);

// Predictions on a fixed grid; the training responses are evaluated on the
// grid once and reused for every covariate.
class GridPredictor {
 public:
  GridPredictor(const FittedModel& model, std::vector<double> grid);

  const std::vector<double>& grid() const { return grid_; }
  // n x grid matrix of recovered training responses.
  const Eigen::MatrixXd& y_values() const { return y_values_; }
  const Eigen::VectorXd& y_mean() const { return y_mean_; }

  Eigen::VectorXd operator()(const PredictionWeights& weights) const;
  Eigen::VectorXd operator()(const ObservedCurve& x0) const;

 private:
  const FittedModel* model_;
  std::vector<double> grid_;
  Eigen::MatrixXd y_values_;
  Eigen::VectorXd y_mean_;
};

// yhat(t) = sum_i w_i Y_i(t) + n^-1 sum_i Y_i(t).
Eigen::VectorXd predict(const FittedModel& model, const ObservedCurve& x0,
                        std::span<const double> grid);

// Trapezoidal integral of (predicted - truth)^2 over the grid.
double ise(std::span<const double> predicted, std::span<const double> truth,
           std::span<const double> grid);

}  // namespace nlffr
