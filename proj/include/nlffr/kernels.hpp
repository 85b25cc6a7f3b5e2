#pragma once

#include <cmath>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace nlffr {

enum class TimeKernelKind { GaussianRBF, BrownianCovariance };

std::string to_string(TimeKernelKind kind);
TimeKernelKind time_kernel_kind_from_string(const std::string& name);

// First-layer kernel on the time domain [0,1].
//   GaussianRBF(gamma):  k(s,t) = exp(-gamma (s-t)^2)
//   BrownianCovariance:  k(s,t) = min(s,t)
class TimeKernel {
 public:
  static TimeKernel gaussian(double gamma);
  static TimeKernel brownian();
  // gamma is ignored for the Brownian kernel.
  static TimeKernel make(TimeKernelKind kind, double gamma);

  TimeKernelKind kind() const { return kind_; }
  // 0 for the Brownian kernel.
  double gamma() const { return gamma_; }

  double operator()(double s, double t) const {
    if (kind_ == TimeKernelKind::GaussianRBF) {
      const double d = s - t;
      return std::exp(-gamma_ * d * d);
    }
    return s < t ? s : t;
  }

  bool operator==(const TimeKernel&) const = default;

 private:
  TimeKernel(TimeKernelKind kind, double gamma) : kind_(kind), gamma_(gamma) {}

  TimeKernelKind kind_;
  double gamma_;
};

Eigen::MatrixXd time_gram(const TimeKernel& kernel, std::span<const double> points);

// Rectangular block with entries k(a_k, b_l).
Eigen::MatrixXd time_cross_gram(const TimeKernel& kernel, std::span<const double> a,
                                std::span<const double> b);

// Second-layer Gaussian kernel on the first-layer Hilbert space,
//   kappa(f,g) = exp(-gamma_x ||f-g||^2),
// computed from the three inner products <f,f>, <f,g>, <g,g>.
class SecondLayerKernel {
 public:
  explicit SecondLayerKernel(double gamma_x);

  double gamma() const { return gamma_; }

  // Throws NumericalError when aa - 2ab + bb is negative beyond rounding.
  double operator()(double aa, double ab, double bb) const;

 private:
  double gamma_;
};

// Squared distance aa - 2ab + bb with rounding-level negatives clipped to 0.
double squared_distance(double aa, double ab, double bb);

}  // namespace nlffr
