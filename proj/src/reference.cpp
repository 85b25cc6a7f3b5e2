#include "nlffr/reference.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "nlffr/errors.hpp"
#include "nlffr/inference.hpp"
#include "nlffr/rng.hpp"

namespace nlffr::reference {

Eigen::MatrixXd hx_gram(std::span<const RecoveredCurve> curves) {
  const auto n = static_cast<Eigen::Index>(curves.size());
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = hx_inner(curves[i], curves[j]);
  }
  return h;
}

std::vector<SmoothingScore> gcv_smoothing_scores(std::span<const ObservedCurve> curves,
                                                 TimeKernelKind kind,
                                                 std::span<const double> eps_grid,
                                                 std::span<const double> gamma_grid) {
  std::vector<double> gammas(gamma_grid.begin(), gamma_grid.end());
  if (kind == TimeKernelKind::BrownianCovariance) gammas = {0.0};
  std::vector<SmoothingScore> out;
  for (double gamma : gammas) {
    const TimeKernel kernel = TimeKernel::make(kind, gamma);
    for (double eps : eps_grid) {
      double total = 0.0;
      for (const auto& c : curves) {
        const auto m = static_cast<Eigen::Index>(c.size());
        const Eigen::MatrixXd k = time_gram(kernel, c.times);
        Eigen::MatrixXd shifted = k + eps * Eigen::MatrixXd::Identity(m, m);
        const Eigen::MatrixXd smoother = k * shifted.fullPivLu().inverse();
        const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(c.values.data(), m);
        const double rss = (v - smoother * v).squaredNorm();
        const double denom = 1.0 - smoother.trace() / static_cast<double>(m);
        total += denom > 0.0 ? (rss / static_cast<double>(m)) / (denom * denom)
                             : std::numeric_limits<double>::infinity();
      }
      out.push_back({eps, gamma, total});
    }
  }
  return out;
}

std::vector<RegressionScore> regression_gcv_scores(const Eigen::MatrixXd& hx_gram,
                                                   const Eigen::MatrixXd& ky_inner,
                                                   const RegressionTuning& tuning) {
  const Eigen::Index n = hx_gram.rows();
  const double dn = static_cast<double>(n);
  double ref = 1.0;
  if (tuning.gamma_scale == GammaScale::MedianHeuristic) {
    const double med = median_squared_distance(hx_gram);
    if (med > 0.0) ref = med;
  }
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / dn);
  const Eigen::RowVectorXd ones_over_n = Eigen::RowVectorXd::Constant(n, 1.0 / dn);
  std::vector<RegressionScore> out;
  for (double grid_value : tuning.gamma_grid) {
    const double gamma = grid_value / ref;
    const Eigen::MatrixXd k = second_layer_gram(hx_gram, SecondLayerKernel(gamma));
    const Eigen::MatrixXd g = q * k * q;
    for (double eps : tuning.eps_grid) {
      const Eigen::MatrixXd inv = (g + eps * Eigen::MatrixXd::Identity(n, n)).fullPivLu().inverse();
      const Eigen::MatrixXd hat = q * g * inv;
      double rss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd a = -(hat.row(i) + ones_over_n).transpose();
        a[i] += 1.0;
        rss += a.dot(ky_inner * a);
      }
      const double trace = hat.trace() + 1.0;
      const double denom = 1.0 - trace / dn;
      const double score = denom > 0.0 ? (rss / dn) / (denom * denom)
                                       : std::numeric_limits<double>::infinity();
      out.push_back({eps, gamma, grid_value, score});
    }
  }
  return out;
}

std::vector<double> simulate_sup_norms(const Eigen::MatrixXd& cov, std::size_t n_paths,
                                       std::uint64_t seed) {
  const Eigen::MatrixXd root = covariance_root(cov);
  std::vector<double> sups;
  sups.reserve(n_paths);
  Eigen::VectorXd xi(root.rows());
  for (std::size_t p = 0; p < n_paths; ++p) {
    Engine rng = make_engine(seed, "gaussian-path", p);
    std::normal_distribution<double> normal;
    for (Eigen::Index k = 0; k < xi.size(); ++k) xi[k] = normal(rng);
    sups.push_back((root * xi).cwiseAbs().maxCoeff());
  }
  return sups;
}

}  // namespace nlffr::reference
