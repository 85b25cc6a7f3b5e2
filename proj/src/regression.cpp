#include "nlffr/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nlffr/errors.hpp"

namespace nlffr {

std::string to_string(GammaScale scale) {
  return scale == GammaScale::Absolute ? "absolute" : "median";
}

GammaScale gamma_scale_from_string(const std::string& name) {
  if (name == "absolute") return GammaScale::Absolute;
  if (name == "median") return GammaScale::MedianHeuristic;
  throw ValidationError("unknown gamma scale '" + name + "' (expected absolute or median)");
}

std::vector<double> default_regression_eps_grid() { return {1e-4, 1e-3, 1e-2, 1e-1, 1.0}; }

std::vector<double> default_regression_gamma_grid() { return {0.1, 0.2, 0.5, 1.0, 2.0, 5.0}; }

FitConfig default_fit_config(TimeKernelKind kind) {
  FitConfig cfg;
  cfg.x.kernel = kind;
  cfg.y.kernel = kind;
  return cfg;
}

Eigen::MatrixXd second_layer_gram(const Eigen::MatrixXd& hx_gram, const SecondLayerKernel& kernel) {
  const Eigen::Index n = hx_gram.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = kernel(hx_gram(i, i), hx_gram(i, j), hx_gram(j, j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd center_gram(const Eigen::MatrixXd& gram) {
  const Eigen::VectorXd row_mean = gram.rowwise().mean();
  const Eigen::RowVectorXd col_mean = gram.colwise().mean();
  const double grand = gram.mean();
  Eigen::MatrixXd g = gram;
  g.colwise() -= row_mean;
  g.rowwise() -= col_mean;
  g.array() += grand;
  return 0.5 * (g + g.transpose());
}

double median_squared_distance(const Eigen::MatrixXd& hx_gram) {
  std::vector<double> d;
  const Eigen::Index n = hx_gram.rows();
  for (Eigen::Index j = 1; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      d.push_back(squared_distance(hx_gram(i, i), hx_gram(i, j), hx_gram(j, j)));
    }
  }
  if (d.empty()) return 0.0;
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  if (d.size() % 2 == 1) return d[mid];
  const double upper = d[mid];
  const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

Eigen::MatrixXd fitted_value_weights(const Eigen::MatrixXd& gx, double epsilon_x) {
  const Eigen::Index n = gx.rows();
  Eigen::MatrixXd shifted = gx;
  shifted.diagonal().array() += epsilon_x;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) throw NumericalError("G_X + eps I is not positive definite");
  // G (G + eps I)^-1 = [(G + eps I)^-1 G]^T since both are symmetric and commute.
  Eigen::MatrixXd a = llt.solve(gx).transpose();
  a.array() += 1.0 / static_cast<double>(n);
  return a;
}

namespace {

double gamma_reference(const Eigen::MatrixXd& hx_gram, GammaScale scale) {
  if (scale == GammaScale::Absolute) return 1.0;
  const double med = median_squared_distance(hx_gram);
  return med > 0.0 && std::isfinite(med) ? med : 1.0;
}

void check_positive_grid(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw ValidationError(std::string(what) + " grid is empty");
  for (double v : grid) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string(what) + " grid values must be positive");
    }
  }
}

}  // namespace

std::vector<RegressionScore> regression_gcv_scores(const Eigen::MatrixXd& hx_gram,
                                                   const Eigen::MatrixXd& ky_inner,
                                                   const RegressionTuning& tuning) {
  check_positive_grid(tuning.eps_grid, "epsilon_x");
  check_positive_grid(tuning.gamma_grid, "gamma_x");
  const Eigen::Index n = hx_gram.rows();
  const double dn = static_cast<double>(n);
  const double ref = gamma_reference(hx_gram, tuning.gamma_scale);
  const std::size_t n_eps = tuning.eps_grid.size();
  const auto n_gamma = static_cast<std::ptrdiff_t>(tuning.gamma_grid.size());
  std::vector<RegressionScore> scores(tuning.gamma_grid.size() * n_eps);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t gi = 0; gi < n_gamma; ++gi) {
    const double grid_value = tuning.gamma_grid[static_cast<std::size_t>(gi)];
    const double gamma = grid_value / ref;
    const Eigen::MatrixXd gx = center_gram(second_layer_gram(hx_gram, SecondLayerKernel(gamma)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gx);
    const Eigen::ArrayXd g = eig.eigenvalues().array().cwiseMax(0.0);
    const Eigen::MatrixXd& v = eig.eigenvectors();
    for (std::size_t e = 0; e < n_eps; ++e) {
      const double eps = tuning.eps_grid[e];
      const Eigen::ArrayXd shrink = g / (g + eps);
      // R = I - A with A = G (G + eps I)^-1 + 11^T/n
      Eigen::MatrixXd r = -(v * shrink.matrix().asDiagonal() * v.transpose());
      r.array() -= 1.0 / dn;
      r.diagonal().array() += 1.0;
      const double rss = (r * ky_inner).cwiseProduct(r).sum();
      const double trace = shrink.sum() + 1.0;
      const double denom = 1.0 - trace / dn;
      const double score = denom > 0.0 ? (rss / dn) / (denom * denom)
                                       : std::numeric_limits<double>::infinity();
      scores[static_cast<std::size_t>(gi) * n_eps + e] = {eps, gamma, grid_value, score};
    }
  }
  return scores;
}

RegressionChoice select_regression(std::span<const RegressionScore> scores) {
  const RegressionScore* best = nullptr;
  for (const auto& s : scores) {
    if (std::isnan(s.score)) continue;
    if (best == nullptr || s.score < best->score ||
        (s.score == best->score &&
         (s.epsilon < best->epsilon || (s.epsilon == best->epsilon && s.gamma < best->gamma)))) {
      best = &s;
    }
  }
  if (best == nullptr || !std::isfinite(best->score)) {
    throw NumericalError("GCV regression: no grid point has a finite score");
  }
  return {best->epsilon, best->gamma, best->grid_value, best->score};
}

RegressionChoice gcv_regression(const Eigen::MatrixXd& hx_gram, const Eigen::MatrixXd& ky_inner,
                                const RegressionTuning& tuning) {
  const auto scores = regression_gcv_scores(hx_gram, ky_inner, tuning);
  return select_regression(scores);
}

FittedModel::FittedModel(Parts parts) : parts_(std::move(parts)) {
  const auto n = static_cast<Eigen::Index>(parts_.x_curves.size());
  if (n < 2) throw ValidationError("a fitted model needs at least 2 subjects");
  if (static_cast<Eigen::Index>(parts_.y_curves.size()) != n ||
      static_cast<Eigen::Index>(parts_.subject_ids.size()) != n) {
    throw ValidationError("model parts disagree on the number of subjects");
  }
  for (const Eigen::MatrixXd* m : {&parts_.hx_gram, &parts_.kx, &parts_.gx, &parts_.ky_inner}) {
    if (m->rows() != n || m->cols() != n) throw ValidationError("model matrix has wrong shape");
  }
  if (!(parts_.epsilon_x > 0.0) || !(parts_.gamma_x > 0.0)) {
    throw ValidationError("model tuning parameters must be positive");
  }
  Eigen::MatrixXd shifted = parts_.gx;
  shifted.diagonal().array() += parts_.epsilon_x;
  g_solver_.compute(shifted);
  if (g_solver_.info() != Eigen::Success) throw NumericalError("G_X + eps I is not positive definite");
  shifted = parts_.kx;
  shifted.diagonal().array() += parts_.epsilon_x;
  k_solver_.compute(shifted);
  if (k_solver_.info() != Eigen::Success) throw NumericalError("K_X + eps I is not positive definite");
  kx_row_means_ = parts_.kx.rowwise().mean();
  x_table_ = EvalTable(parts_.x_curves, union_times(parts_.x_curves));
}

FittedModel FittedModel::assemble(std::vector<std::string> subject_ids,
                                  std::vector<RecoveredCurve> x_curves,
                                  std::vector<RecoveredCurve> y_curves, double epsilon_x,
                                  double gamma_x, TuningReport report) {
  Parts p;
  p.subject_ids = std::move(subject_ids);
  p.hx_gram = nlffr::hx_gram(x_curves);
  p.ky_inner = nlffr::hx_gram(y_curves);
  p.kx = second_layer_gram(p.hx_gram, SecondLayerKernel(gamma_x));
  p.gx = center_gram(p.kx);
  p.x_curves = std::move(x_curves);
  p.y_curves = std::move(y_curves);
  p.epsilon_x = epsilon_x;
  p.gamma_x = gamma_x;
  p.report = report;
  return FittedModel(std::move(p));
}

namespace {

SmoothingChoice choose_smoothing(std::span<const ObservedCurve> curves, const SmoothingConfig& cfg,
                                 const char* side) {
  if (!cfg.fixed) return gcv_smoothing(curves, cfg.kernel, cfg.eps_grid, cfg.gamma_grid);
  const bool grb = cfg.kernel == TimeKernelKind::GaussianRBF;
  if (cfg.eps_grid.size() != 1 || (grb && cfg.gamma_grid.size() != 1)) {
    throw ValidationError(std::string(side) + " smoothing is fixed but its grids do not hold exactly one value");
  }
  const double eps = cfg.eps_grid.front();
  if (!(eps > 0.0)) throw ValidationError(std::string(side) + " smoothing epsilon must be positive");
  return {eps, grb ? cfg.gamma_grid.front() : 0.0, std::numeric_limits<double>::quiet_NaN()};
}

std::vector<RecoveredCurve> recover_all(std::span<const ObservedCurve> curves,
                                        const TimeKernel& kernel, double eps) {
  std::vector<std::optional<RecoveredCurve>> tmp(curves.size());
  const auto n = static_cast<std::ptrdiff_t>(curves.size());
  // Errors are re-raised outside the parallel region.
  std::vector<std::string> errors(curves.size());
  std::vector<int> kinds(curves.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      tmp[k].emplace(recover(curves[k], kernel, eps));
    } catch (const ValidationError& e) {
      errors[k] = e.what();
      kinds[k] = 1;
    } catch (const std::exception& e) {
      errors[k] = e.what();
      kinds[k] = 2;
    }
  }
  std::vector<RecoveredCurve> out;
  out.reserve(curves.size());
  for (std::size_t k = 0; k < curves.size(); ++k) {
    if (kinds[k] == 1) throw ValidationError(errors[k]);
    if (kinds[k] == 2) throw NumericalError(errors[k]);
    out.push_back(std::move(*tmp[k]));
  }
  return out;
}

}  // namespace

FittedModel fit(std::span<const ObservedCurve> x, std::span<const ObservedCurve> y,
                const FitConfig& config) {
  std::map<std::string, std::size_t> y_index;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y_index.emplace(y[i].subject_id, i).second) {
      throw ValidationError("duplicate response subject '" + y[i].subject_id + "'");
    }
  }
  std::vector<ObservedCurve> ys;
  std::vector<std::string> ids;
  std::string unpaired;
  std::map<std::string, bool> seen;
  for (const auto& c : x) {
    if (!seen.emplace(c.subject_id, true).second) {
      throw ValidationError("duplicate covariate subject '" + c.subject_id + "'");
    }
    auto it = y_index.find(c.subject_id);
    if (it == y_index.end()) {
      unpaired += (unpaired.empty() ? "" : ", ") + c.subject_id;
      continue;
    }
    ys.push_back(y[it->second]);
    ids.push_back(c.subject_id);
  }
  for (const auto& c : y) {
    if (!seen.count(c.subject_id)) unpaired += (unpaired.empty() ? "" : ", ") + c.subject_id;
  }
  if (!unpaired.empty()) throw ValidationError("unpaired subjects: " + unpaired);
  if (x.size() < 2) throw ValidationError("fit needs at least 2 paired subjects");
  for (const auto& c : x) validate(c);
  for (const auto& c : ys) validate(c);

  TuningReport report;
  report.x = choose_smoothing(x, config.x, "x");
  report.y = choose_smoothing(ys, config.y, "y");
  report.x_fixed = config.x.fixed;
  report.y_fixed = config.y.fixed;

  const TimeKernel kx_time = TimeKernel::make(config.x.kernel, report.x.gamma);
  const TimeKernel ky_time = TimeKernel::make(config.y.kernel, report.y.gamma);
  auto x_curves = recover_all(x, kx_time, report.x.epsilon);
  auto y_curves = recover_all(ys, ky_time, report.y.epsilon);

  FittedModel::Parts p;
  p.subject_ids = std::move(ids);
  p.hx_gram = hx_gram(x_curves);
  p.ky_inner = hx_gram(y_curves);

  const RegressionTuning& tuning = config.regression;
  report.gamma_scale = tuning.gamma_scale;
  report.gamma_reference = gamma_reference(p.hx_gram, tuning.gamma_scale);
  report.regression_fixed = tuning.fixed;
  if (tuning.fixed) {
    if (tuning.eps_grid.size() != 1 || tuning.gamma_grid.size() != 1) {
      throw ValidationError("regression tuning is fixed but its grids do not hold exactly one value");
    }
    check_positive_grid(tuning.eps_grid, "epsilon_x");
    check_positive_grid(tuning.gamma_grid, "gamma_x");
    report.regression = {tuning.eps_grid.front(), tuning.gamma_grid.front() / report.gamma_reference,
                         tuning.gamma_grid.front(), std::numeric_limits<double>::quiet_NaN()};
  } else {
    report.regression = gcv_regression(p.hx_gram, p.ky_inner, tuning);
  }

  p.epsilon_x = report.regression.epsilon_x;
  p.gamma_x = report.regression.gamma_x;
  p.kx = second_layer_gram(p.hx_gram, SecondLayerKernel(p.gamma_x));
  p.gx = center_gram(p.kx);
  p.x_curves = std::move(x_curves);
  p.y_curves = std::move(y_curves);
  p.report = report;
  return FittedModel(std::move(p));
}

RecoveredCurve recover_covariate(const FittedModel& model, const ObservedCurve& x0) {
  return recover(x0, model.x_kernel(), model.x_smoothing_epsilon());
}

Eigen::VectorXd d_vector(const FittedModel& model, const RecoveredCurve& x0) {
  const Eigen::VectorXd cross = hx_inner_column(model.x_table(), model.x_curves(), x0);
  const double self = hx_inner(x0, x0);
  const SecondLayerKernel kappa(model.gamma_x());
  Eigen::VectorXd d(model.n());
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    d[i] = kappa(model.hx_gram()(i, i), cross[i], self) - model.kx_row_means()[i];
  }
  return d;
}

PredictionWeights weights_from_d(const FittedModel& model, Eigen::VectorXd d_x) {
  PredictionWeights pw;
  pw.c_x = model.solve_kx(d_x);
  pw.c_x.array() -= pw.c_x.mean();
  pw.w = model.gx() * model.solve_gx(pw.c_x);
  pw.d_x = std::move(d_x);
  return pw;
}

PredictionWeights prediction_weights(const FittedModel& model, const ObservedCurve& x0) {
  return weights_from_d(model, d_vector(model, recover_covariate(model, x0)));
}

GridPredictor::GridPredictor(const FittedModel& model, std::vector<double> grid)
    : model_(&model), grid_(std::move(grid)) {
  if (grid_.empty()) throw ValidationError("prediction grid is empty");
  for (double t : grid_) {
    if (!std::isfinite(t)) throw ValidationError("prediction grid holds a non-finite time");
  }
  const Eigen::Index n = model.n();
  const auto g = static_cast<Eigen::Index>(grid_.size());
  y_values_.resize(n, g);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < g; ++k) y_values_(i, k) = model.y_curves()[i](grid_[k]);
  }
  y_mean_ = y_values_.colwise().mean().transpose();
}

Eigen::VectorXd GridPredictor::operator()(const PredictionWeights& weights) const {
  return y_values_.transpose() * weights.w + y_mean_;
}

Eigen::VectorXd GridPredictor::operator()(const ObservedCurve& x0) const {
  return (*this)(prediction_weights(*model_, x0));
}

Eigen::VectorXd predict(const FittedModel& model, const ObservedCurve& x0,
                        std::span<const double> grid) {
  return GridPredictor(model, std::vector<double>(grid.begin(), grid.end()))(x0);
}

double ise(std::span<const double> predicted, std::span<const double> truth,
           std::span<const double> grid) {
  if (predicted.size() != truth.size() || predicted.size() != grid.size()) {
    throw ValidationError("ise: predicted, truth and grid lengths differ");
  }
  if (grid.size() < 2) throw ValidationError("ise needs at least 2 grid points");
  double total = 0.0;
  double prev = (predicted[0] - truth[0]) * (predicted[0] - truth[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = (predicted[k] - truth[k]) * (predicted[k] - truth[k]);
    total += 0.5 * (grid[k] - grid[k - 1]) * (prev + cur);
    prev = cur;
  }
  return total;
}

}  // namespace nlffr
