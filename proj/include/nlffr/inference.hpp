#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nlffr/regression.hpp"

namespace nlffr {

// Eigenpairs of the estimated covariance operator n^-1 G_X. Column j of
// `coords` holds a_j, the coordinates of phi_j in the spanning system
// {kappa(., X_i) - mu_X}, scaled so that a_j^T G_X a_j = 1.
struct EigenSystem {
  Eigen::VectorXd lambdas;     // retained, nonincreasing
  Eigen::MatrixXd coords;      // n x J
  Eigen::VectorXd all_lambdas; // every eigenvalue, nonincreasing (negatives clipped to 0)

  Eigen::Index retained() const { return lambdas.size(); }
};

// Keeps eigenvalues above rel_tol * lambda_1. Throws NumericalError when no
// eigenvalue is positive (constant covariates).
EigenSystem eigen_system(const FittedModel& model, double rel_tol = 1e-10);
EigenSystem eigen_system(const Eigen::MatrixXd& gx, double rel_tol = 1e-10);

// phi_j(x0) = a_j^T d_{x0}, j zero-based.
double phi_at(const EigenSystem& es, Eigen::Index j, const Eigen::VectorXd& d_x);

// Training residuals U_i = Y_i - Yhat(X_i) on a working grid.
struct ResidualModel {
  Eigen::MatrixXd u_weights;   // n x n, I - A: U_i = sum_k u_weights(i,k) Y_k
  std::vector<double> grid;
  Eigen::MatrixXd residuals;   // n x grid
  Eigen::VectorXd u2;          // n^-1 sum_i U_i(t)^2
  Eigen::MatrixXd sigma_uu;    // n^-1 sum_i U_i(s) U_i(t)
};

ResidualModel residual_model(const FittedModel& model, const GridPredictor& predictor);

// sigma_{n,3}(x0, t) = sqrt(n^-1 E[U^2(t)] sum_j lambda_j (lambda_j + eps_n)^-2 phi_j(x0)^2)
// with eps_n = eps_X / n. `u2` is E[U^2(t)] at the point of interest.
double pointwise_sigma(const FittedModel& model, const EigenSystem& es, double u2,
                       const Eigen::VectorXd& d_x);

// Series factor sum_j lambda_j (lambda_j + eps_n)^-2 phi_j(x0)^2 shared by
// every t for one covariate.
double pointwise_series(const FittedModel& model, const EigenSystem& es,
                        const Eigen::VectorXd& d_x);

// z_{1-alpha/2} sigma_{n,3}(x0, t) for every point of the residual grid.
// Throws ValidationError unless 0 < alpha <= 1.
Eigen::VectorXd pointwise_halfwidths(const FittedModel& model, const EigenSystem& es,
                                     const ResidualModel& resid, const Eigen::VectorXd& d_x,
                                     double alpha);

// s_n = ||w||_2.
double s_n_hat(const PredictionWeights& weights);

// Symmetric square root with negative eigenvalues clipped to 0.
Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& cov);

// sup_t |Z(t)| for n_paths centered Gaussian vectors with covariance `cov`
// (symmetric square root, negative eigenvalues clipped). Path p draws from
// substream (seed, "gaussian-path", p), so the result does not depend on
// the thread count.
std::vector<double> simulate_sup_norms(const Eigen::MatrixXd& cov, std::size_t n_paths,
                                       std::uint64_t seed);

// Empirical (1 - alpha) quantile, order statistic ceil((1-alpha) N).
double upper_quantile(std::vector<double> values, double alpha);

double simulate_c_alpha(const Eigen::MatrixXd& cov, double alpha, std::size_t n_paths,
                        std::uint64_t seed);

struct BandResult {
  std::vector<double> grid;
  Eigen::VectorXd center;
  Eigen::VectorXd pointwise_halfwidth;
  double band_halfwidth = 0.0;
  double alpha = 0.05;
  double s_n = 0.0;
  double c_alpha = 0.0;
};

// Everything needed to produce intervals and bands for many covariates from
// one fitted model and one grid.
class BandBuilder {
 public:
  BandBuilder(const FittedModel& model, std::vector<double> grid, double alpha,
              std::size_t n_paths, std::uint64_t seed);

  const GridPredictor& predictor() const { return predictor_; }
  const EigenSystem& eigen() const { return eigen_; }
  const ResidualModel& residuals() const { return resid_; }
  double c_alpha() const { return c_alpha_; }
  double alpha() const { return alpha_; }

  BandResult operator()(const ObservedCurve& x0) const;
  BandResult operator()(const PredictionWeights& weights) const;

 private:
  const FittedModel* model_;
  GridPredictor predictor_;
  EigenSystem eigen_;
  ResidualModel resid_;
  double alpha_;
  double c_alpha_;
};

// Pointwise intervals and the simultaneous band yhat(t) +- s_n C(alpha).
BandResult simultaneous_band(const FittedModel& model, const ObservedCurve& x0,
                             std::vector<double> grid, double alpha, std::size_t n_paths,
                             std::uint64_t seed);

// Standard normal quantile.
double normal_quantile(double p);

}  // namespace nlffr
