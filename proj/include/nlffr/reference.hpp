#pragma once

// Serial, formula-by-formula versions of the parallel kernels. They are slow
// and kept for tests and benchmarks only.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nlffr/funcdata.hpp"
#include "nlffr/regression.hpp"

namespace nlffr::reference {

// Direct double loop of hx_inner.
Eigen::MatrixXd hx_gram(std::span<const RecoveredCurve> curves);

// Explicit smoother S_i = K (K + eps I)^-1 per curve and grid point.
std::vector<SmoothingScore> gcv_smoothing_scores(std::span<const ObservedCurve> curves,
                                                 TimeKernelKind kind,
                                                 std::span<const double> eps_grid,
                                                 std::span<const double> gamma_grid);

// Per-subject residual weights and explicit Q, solved per grid point.
std::vector<RegressionScore> regression_gcv_scores(const Eigen::MatrixXd& hx_gram,
                                                   const Eigen::MatrixXd& ky_inner,
                                                   const RegressionTuning& tuning);

// Single-threaded path loop over the same substreams.
std::vector<double> simulate_sup_norms(const Eigen::MatrixXd& cov, std::size_t n_paths,
                                       std::uint64_t seed);

}  // namespace nlffr::reference
