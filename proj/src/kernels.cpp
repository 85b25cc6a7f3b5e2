#include "nlffr/kernels.hpp"

#include <algorithm>

#include "nlffr/errors.hpp"

namespace nlffr {

std::string to_string(TimeKernelKind kind) {
  return kind == TimeKernelKind::GaussianRBF ? "grb" : "bmc";
}

TimeKernelKind time_kernel_kind_from_string(const std::string& name) {
  if (name == "grb" || name == "GRB" || name == "gaussian") return TimeKernelKind::GaussianRBF;
  if (name == "bmc" || name == "BMC" || name == "brownian") return TimeKernelKind::BrownianCovariance;
  throw ValidationError("unknown time kernel '" + name + "' (expected grb or bmc)");
}

TimeKernel TimeKernel::gaussian(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("Gaussian kernel gamma must be positive and finite");
  }
  return TimeKernel(TimeKernelKind::GaussianRBF, gamma);
}

TimeKernel TimeKernel::brownian() { return TimeKernel(TimeKernelKind::BrownianCovariance, 0.0); }

TimeKernel TimeKernel::make(TimeKernelKind kind, double gamma) {
  return kind == TimeKernelKind::GaussianRBF ? gaussian(gamma) : brownian();
}

Eigen::MatrixXd time_gram(const TimeKernel& kernel, std::span<const double> points) {
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j; i < m; ++i) {
      const double v = kernel(points[i], points[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

Eigen::MatrixXd time_cross_gram(const TimeKernel& kernel, std::span<const double> a,
                                std::span<const double> b) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) k(i, j) = kernel(a[i], b[j]);
  }
  return k;
}

SecondLayerKernel::SecondLayerKernel(double gamma_x) : gamma_(gamma_x) {
  if (!(gamma_x > 0.0) || !std::isfinite(gamma_x)) {
    throw ValidationError("second-layer gamma must be positive and finite");
  }
}

double squared_distance(double aa, double ab, double bb) {
  const double d = aa - 2.0 * ab + bb;
  if (d >= 0.0) return d;
  // Cancellation error grows with the magnitude of the operands.
  const double tol = 1e-10 * std::max(1.0, std::abs(aa) + std::abs(bb));
  if (d >= -tol) return 0.0;
  throw NumericalError("inconsistent inner products: squared distance " + std::to_string(d));
}

double SecondLayerKernel::operator()(double aa, double ab, double bb) const {
  return std::exp(-gamma_ * squared_distance(aa, ab, bb));
}

}  // namespace nlffr
