#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlffr/kernels.hpp"

namespace nlffr {

// One subject's irregular samples on [0,1]. Times are strictly increasing.
struct ObservedCurve {
  std::string subject_id;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
};

// Throws ValidationError unless times are strictly increasing in [0,1], the
// two sequences have equal nonzero length and every value is finite.
void validate(const ObservedCurve& curve);

// Smoothed trajectory sum_k coeffs_k k(., times_k) in the RKHS of `kernel`.
class RecoveredCurve {
 public:
  RecoveredCurve(std::vector<double> times, Eigen::VectorXd coeffs, TimeKernel kernel,
                 double epsilon);

  const std::vector<double>& times() const { return times_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  const TimeKernel& kernel() const { return kernel_; }
  double epsilon() const { return epsilon_; }
  std::size_t size() const { return times_.size(); }

  double operator()(double t) const;

 private:
  std::vector<double> times_;
  Eigen::VectorXd coeffs_;
  TimeKernel kernel_;
  double epsilon_;
};

// Solves (K + eps I) c = values for the curve's own Gram matrix K.
RecoveredCurve recover(const ObservedCurve& curve, const TimeKernel& kernel, double epsilon);

// Cholesky solve of (K + eps I) x = rhs. Retries once with a diagonal jitter
// of 1e-10 trace(K)/m, then throws NumericalError.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& gram, double epsilon,
                            const Eigen::VectorXd& rhs);

inline double evaluate(const RecoveredCurve& rc, double t) { return rc(t); }

// <a,b> in the first-layer RKHS: [a]^T K(a.times, b.times) [b].
// Throws ValidationError when the curves use different kernels.
double hx_inner(const RecoveredCurve& a, const RecoveredCurve& b);

// Sorted distinct anchor times over a set of curves.
std::vector<double> union_times(std::span<const RecoveredCurve> curves);

// Values of a set of recovered curves at a shared set of times. Used to turn
// many inner products against the same curves into table lookups.
class EvalTable {
 public:
  EvalTable() = default;
  EvalTable(std::span<const RecoveredCurve> curves, std::vector<double> times);

  const std::vector<double>& times() const { return times_; }
  // rows: curves, columns: times
  const Eigen::MatrixXd& values() const { return values_; }
  std::optional<Eigen::Index> column(double t) const;

 private:
  std::vector<double> times_;
  Eigen::MatrixXd values_;
};

// out_i = <curves_i, b>, using `table` (built from `curves`) wherever b's
// anchor times were tabulated.
Eigen::VectorXd hx_inner_column(const EvalTable& table, std::span<const RecoveredCurve> curves,
                                const RecoveredCurve& b);

// Pairwise inner products of a set of recovered curves. Symmetric by
// construction; parallel over columns.
Eigen::MatrixXd hx_gram(std::span<const RecoveredCurve> curves);

struct SmoothingChoice {
  double epsilon = 0.0;
  // 0 for the Brownian kernel, which has no bandwidth.
  double gamma = 0.0;
  double gcv_score = 0.0;
};

struct SmoothingScore {
  double epsilon;
  double gamma;
  double score;  // +inf when some trace(S_i)/m_i >= 1
};

// GCV(eps, gamma) = sum_i [m_i^-1 sum_j (X_i(t_ij) - Xhat_i(t_ij))^2] / [1 - tr(S_i)/m_i]^2
// for every grid pair, gamma-major. Curves sharing the same time vector
// share one eigendecomposition per gamma.
std::vector<SmoothingScore> gcv_smoothing_scores(std::span<const ObservedCurve> curves,
                                                 TimeKernelKind kind,
                                                 std::span<const double> eps_grid,
                                                 std::span<const double> gamma_grid);

// Minimizer of the score list; ties go to smaller epsilon, then smaller gamma.
SmoothingChoice select_smoothing(std::span<const SmoothingScore> scores);

SmoothingChoice gcv_smoothing(std::span<const ObservedCurve> curves, TimeKernelKind kind,
                              std::span<const double> eps_grid,
                              std::span<const double> gamma_grid);

std::vector<double> default_smoothing_eps_grid();
std::vector<double> default_smoothing_gamma_grid();

}  // namespace nlffr
