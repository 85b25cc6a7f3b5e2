#include "nlffr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "nlffr/errors.hpp"
#include "nlffr/rng.hpp"

namespace nlffr {

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

EigenSystem eigen_system(const Eigen::MatrixXd& gx, double rel_tol) {
  const Eigen::Index n = gx.rows();
  if (n == 0 || gx.cols() != n) throw ValidationError("eigen_system needs a square nonempty G_X");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gx / static_cast<double>(n));
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of G_X failed");
  // Eigen returns ascending order.
  const Eigen::VectorXd ascending = eig.eigenvalues();
  EigenSystem es;
  es.all_lambdas = ascending.reverse().cwiseMax(0.0);
  const double top = es.all_lambdas[0];
  if (!(top > 0.0)) {
    throw NumericalError("covariance operator has no positive eigenvalue (constant covariates)");
  }
  Eigen::Index keep = 0;
  while (keep < n && es.all_lambdas[keep] > rel_tol * top) ++keep;
  es.lambdas = es.all_lambdas.head(keep);
  es.coords.resize(n, keep);
  for (Eigen::Index j = 0; j < keep; ++j) {
    const Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - j);
    // a^T G a = n lambda v^T v = 1
    es.coords.col(j) = v / std::sqrt(static_cast<double>(n) * es.lambdas[j]);
  }
  return es;
}

EigenSystem eigen_system(const FittedModel& model, double rel_tol) {
  return eigen_system(model.gx(), rel_tol);
}

double phi_at(const EigenSystem& es, Eigen::Index j, const Eigen::VectorXd& d_x) {
  if (j < 0 || j >= es.retained()) throw ValidationError("eigen component index out of range");
  if (d_x.size() != es.coords.rows()) throw ValidationError("d_x has the wrong length");
  return es.coords.col(j).dot(d_x);
}

ResidualModel residual_model(const FittedModel& model, const GridPredictor& predictor) {
  const Eigen::Index n = model.n();
  ResidualModel r;
  r.u_weights = -fitted_value_weights(model.gx(), model.epsilon_x());
  r.u_weights.diagonal().array() += 1.0;
  r.grid = predictor.grid();
  r.residuals = r.u_weights * predictor.y_values();
  const double dn = static_cast<double>(n);
  r.u2 = r.residuals.array().square().colwise().sum().transpose() / dn;
  r.sigma_uu = r.residuals.transpose() * r.residuals / dn;
  r.sigma_uu = 0.5 * (r.sigma_uu + r.sigma_uu.transpose()).eval();
  r.sigma_uu.diagonal() = r.u2;
  return r;
}

double pointwise_series(const FittedModel& model, const EigenSystem& es,
                        const Eigen::VectorXd& d_x) {
  const double eps_n = model.epsilon_x() / static_cast<double>(model.n());
  double s = 0.0;
  for (Eigen::Index j = 0; j < es.retained(); ++j) {
    const double lam = es.lambdas[j];
    const double phi = phi_at(es, j, d_x);
    s += lam / ((lam + eps_n) * (lam + eps_n)) * phi * phi;
  }
  return s;
}

double pointwise_sigma(const FittedModel& model, const EigenSystem& es, double u2,
                       const Eigen::VectorXd& d_x) {
  const double v = u2 * pointwise_series(model, es, d_x) / static_cast<double>(model.n());
  return std::sqrt(std::max(v, 0.0));
}

Eigen::VectorXd pointwise_halfwidths(const FittedModel& model, const EigenSystem& es,
                                     const ResidualModel& resid, const Eigen::VectorXd& d_x,
                                     double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double scale = pointwise_series(model, es, d_x) / static_cast<double>(model.n());
  return z * (resid.u2.array() * scale).max(0.0).sqrt().matrix();
}

double s_n_hat(const PredictionWeights& weights) { return weights.w.norm(); }

Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw ValidationError("path covariance must be a nonempty square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the path covariance failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<double> simulate_sup_norms(const Eigen::MatrixXd& cov, std::size_t n_paths,
                                       std::uint64_t seed) {
  const Eigen::MatrixXd root = covariance_root(cov);
  const Eigen::Index g = root.rows();
  std::vector<double> sups(n_paths);
  const auto count = static_cast<std::ptrdiff_t>(n_paths);
#pragma omp parallel
  {
    Eigen::VectorXd xi(g);
#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
      Engine rng = make_engine(seed, "gaussian-path", static_cast<std::uint64_t>(p));
      std::normal_distribution<double> normal;
      for (Eigen::Index k = 0; k < g; ++k) xi[k] = normal(rng);
      sups[static_cast<std::size_t>(p)] = (root * xi).cwiseAbs().maxCoeff();
    }
  }
  return sups;
}

double upper_quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  return values[k - 1];
}

double simulate_c_alpha(const Eigen::MatrixXd& cov, double alpha, std::size_t n_paths,
                        std::uint64_t seed) {
  if (n_paths < 100) throw ValidationError("band simulation needs at least 100 paths");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  return upper_quantile(simulate_sup_norms(cov, n_paths, seed), alpha);
}

BandBuilder::BandBuilder(const FittedModel& model, std::vector<double> grid, double alpha,
                         std::size_t n_paths, std::uint64_t seed)
    : model_(&model),
      predictor_(model, std::move(grid)),
      eigen_(eigen_system(model)),
      resid_(residual_model(model, predictor_)),
      alpha_(alpha),
      c_alpha_(simulate_c_alpha(resid_.sigma_uu, alpha, n_paths, seed)) {}

BandResult BandBuilder::operator()(const ObservedCurve& x0) const {
  return (*this)(prediction_weights(*model_, x0));
}

BandResult BandBuilder::operator()(const PredictionWeights& pw) const {
  BandResult b;
  b.grid = predictor_.grid();
  b.center = predictor_(pw);
  b.pointwise_halfwidth = pointwise_halfwidths(*model_, eigen_, resid_, pw.d_x, alpha_);
  b.alpha = alpha_;
  b.s_n = s_n_hat(pw);
  b.c_alpha = c_alpha_;
  b.band_halfwidth = b.s_n * c_alpha_;
  return b;
}

BandResult simultaneous_band(const FittedModel& model, const ObservedCurve& x0,
                             std::vector<double> grid, double alpha, std::size_t n_paths,
                             std::uint64_t seed) {
  return BandBuilder(model, std::move(grid), alpha, n_paths, seed)(x0);
}

}  // namespace nlffr
