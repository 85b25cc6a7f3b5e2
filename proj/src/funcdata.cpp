#include "nlffr/funcdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nlffr/errors.hpp"

namespace nlffr {

void validate(const ObservedCurve& curve) {
  const std::string who = "curve '" + curve.subject_id + "': ";
  if (curve.times.empty()) throw ValidationError(who + "no observations");
  if (curve.times.size() != curve.values.size()) {
    throw ValidationError(who + "times and values differ in length");
  }
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    const double t = curve.times[k];
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError(who + "time outside [0,1]");
    if (!std::isfinite(curve.values[k])) throw ValidationError(who + "non-finite value");
    if (k > 0 && !(t > curve.times[k - 1])) {
      throw ValidationError(who + "times must be strictly increasing (duplicate or unsorted time)");
    }
  }
}

RecoveredCurve::RecoveredCurve(std::vector<double> times, Eigen::VectorXd coeffs,
                               TimeKernel kernel, double epsilon)
    : times_(std::move(times)), coeffs_(std::move(coeffs)), kernel_(kernel), epsilon_(epsilon) {
  if (static_cast<Eigen::Index>(times_.size()) != coeffs_.size() || times_.empty()) {
    throw ValidationError("recovered curve needs one coefficient per anchor time");
  }
}

double RecoveredCurve::operator()(double t) const {
  double s = 0.0;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    s += coeffs_[static_cast<Eigen::Index>(k)] * kernel_(t, times_[k]);
  }
  return s;
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& gram, double epsilon,
                            const Eigen::VectorXd& rhs) {
  if (!(epsilon > 0.0)) throw ValidationError("ridge epsilon must be positive");
  const Eigen::Index m = gram.rows();
  Eigen::MatrixXd a = gram;
  a.diagonal().array() += epsilon;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    a.diagonal().array() += 1e-10 * gram.trace() / static_cast<double>(m);
    llt.compute(a);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("Cholesky factorization of K + eps I failed (non-finite input?)");
    }
  }
  Eigen::VectorXd x = llt.solve(rhs);
  if (!x.allFinite()) throw NumericalError("ridge solve produced non-finite coefficients");
  return x;
}

RecoveredCurve recover(const ObservedCurve& curve, const TimeKernel& kernel, double epsilon) {
  validate(curve);
  const Eigen::MatrixXd k = time_gram(kernel, curve.times);
  const Eigen::VectorXd v =
      Eigen::Map<const Eigen::VectorXd>(curve.values.data(), static_cast<Eigen::Index>(curve.size()));
  return RecoveredCurve(curve.times, ridge_solve(k, epsilon, v), kernel, epsilon);
}

double hx_inner(const RecoveredCurve& a, const RecoveredCurve& b) {
  if (!(a.kernel() == b.kernel())) {
    throw ValidationError("inner product of curves recovered with different kernels");
  }
  const Eigen::MatrixXd k = time_cross_gram(a.kernel(), a.times(), b.times());
  return a.coeffs().dot(k * b.coeffs());
}

std::vector<double> union_times(std::span<const RecoveredCurve> curves) {
  std::vector<double> all;
  for (const auto& c : curves) all.insert(all.end(), c.times().begin(), c.times().end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

EvalTable::EvalTable(std::span<const RecoveredCurve> curves, std::vector<double> times)
    : times_(std::move(times)) {
  if (!std::is_sorted(times_.begin(), times_.end())) {
    throw ValidationError("evaluation table times must be sorted");
  }
  const auto n = static_cast<Eigen::Index>(curves.size());
  const auto u = static_cast<Eigen::Index>(times_.size());
  values_.resize(n, u);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < u; ++k) values_(i, k) = curves[i](times_[k]);
  }
}

std::optional<Eigen::Index> EvalTable::column(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t) return std::nullopt;
  return static_cast<Eigen::Index>(it - times_.begin());
}

Eigen::VectorXd hx_inner_column(const EvalTable& table, std::span<const RecoveredCurve> curves,
                                const RecoveredCurve& b) {
  const auto n = static_cast<Eigen::Index>(curves.size());
  if (n > 0 && !(curves[0].kernel() == b.kernel())) {
    throw ValidationError("inner product of curves recovered with different kernels");
  }
  std::vector<std::optional<Eigen::Index>> cols;
  cols.reserve(b.size());
  for (double t : b.times()) cols.push_back(table.column(t));

  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t l = 0; l < b.size(); ++l) {
      const double xi = cols[l] ? table.values()(i, *cols[l]) : curves[i](b.times()[l]);
      s += b.coeffs()[static_cast<Eigen::Index>(l)] * xi;
    }
    out[i] = s;
  }
  return out;
}

Eigen::MatrixXd hx_gram(std::span<const RecoveredCurve> curves) {
  const auto n = static_cast<Eigen::Index>(curves.size());
  for (const auto& c : curves) {
    if (!(c.kernel() == curves[0].kernel())) {
      throw ValidationError("inner product of curves recovered with different kernels");
    }
  }
  const EvalTable table(curves, union_times(curves));
  std::vector<std::vector<Eigen::Index>> cols(curves.size());
  for (std::size_t j = 0; j < curves.size(); ++j) {
    for (double t : curves[j].times()) cols[j].push_back(*table.column(t));
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  // <X_i, X_j> = sum_l c_{j,l} X_i(t_{j,l}); column j is owned by one thread.
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& cj = curves[j].coeffs();
    for (Eigen::Index i = 0; i <= j; ++i) {
      double s = 0.0;
      for (std::size_t l = 0; l < cols[j].size(); ++l) {
        s += cj[static_cast<Eigen::Index>(l)] * table.values()(i, cols[j][l]);
      }
      h(i, j) = s;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) h(j, i) = h(i, j);
  }
  return h;
}

namespace {

struct TimeGroup {
  std::vector<double> times;
  std::vector<std::size_t> members;
};

std::vector<TimeGroup> group_by_times(std::span<const ObservedCurve> curves) {
  std::map<std::vector<double>, std::size_t> index;
  std::vector<TimeGroup> groups;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    auto [it, inserted] = index.try_emplace(curves[i].times, groups.size());
    if (inserted) groups.push_back({curves[i].times, {}});
    groups[it->second].members.push_back(i);
  }
  return groups;
}

void check_grid(std::span<const double> grid, const char* what) {
  if (grid.empty()) throw ValidationError(std::string(what) + " grid is empty");
  for (double v : grid) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string(what) + " grid values must be positive");
    }
  }
}

}  // namespace

std::vector<SmoothingScore> gcv_smoothing_scores(std::span<const ObservedCurve> curves,
                                                 TimeKernelKind kind,
                                                 std::span<const double> eps_grid,
                                                 std::span<const double> gamma_grid) {
  check_grid(eps_grid, "epsilon");
  if (curves.empty()) throw ValidationError("GCV smoothing needs at least one curve");
  for (const auto& c : curves) validate(c);
  std::vector<double> gammas;
  if (kind == TimeKernelKind::GaussianRBF) {
    check_grid(gamma_grid, "gamma");
    gammas.assign(gamma_grid.begin(), gamma_grid.end());
  } else {
    gammas.push_back(0.0);
  }

  const auto groups = group_by_times(curves);
  const auto n_eps = static_cast<Eigen::Index>(eps_grid.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<SmoothingScore> scores;
  scores.reserve(gammas.size() * eps_grid.size());

  for (double gamma : gammas) {
    const TimeKernel kernel = TimeKernel::make(kind, gamma);
    // terms(i, e): curve i's contribution at eps_grid[e]
    Eigen::MatrixXd terms(static_cast<Eigen::Index>(curves.size()), n_eps);
    const auto n_groups = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t g = 0; g < n_groups; ++g) {
      const auto& group = groups[static_cast<std::size_t>(g)];
      const double m = static_cast<double>(group.times.size());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(time_gram(kernel, group.times));
      const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
      for (std::size_t member : group.members) {
        const auto& c = curves[member];
        const Eigen::VectorXd proj =
            eig.eigenvectors().transpose() *
            Eigen::Map<const Eigen::VectorXd>(c.values.data(), static_cast<Eigen::Index>(c.size()));
        for (Eigen::Index e = 0; e < n_eps; ++e) {
          const double eps = eps_grid[static_cast<std::size_t>(e)];
          const Eigen::ArrayXd shrink = eps / (lambda.array() + eps);
          const double rss = (shrink * proj.array()).square().sum();
          const double trace = (lambda.array() / (lambda.array() + eps)).sum();
          const double denom = 1.0 - trace / m;
          terms(static_cast<Eigen::Index>(member), e) =
              denom > 0.0 ? (rss / m) / (denom * denom) : inf;
        }
      }
    }
    for (Eigen::Index e = 0; e < n_eps; ++e) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < terms.rows(); ++i) total += terms(i, e);
      scores.push_back({eps_grid[static_cast<std::size_t>(e)], gamma, total});
    }
  }
  return scores;
}

SmoothingChoice select_smoothing(std::span<const SmoothingScore> scores) {
  const SmoothingScore* best = nullptr;
  for (const auto& s : scores) {
    if (std::isnan(s.score)) continue;
    if (best == nullptr || s.score < best->score ||
        (s.score == best->score &&
         (s.epsilon < best->epsilon || (s.epsilon == best->epsilon && s.gamma < best->gamma)))) {
      best = &s;
    }
  }
  if (best == nullptr || !std::isfinite(best->score)) {
    throw NumericalError("GCV smoothing: no grid point has a finite score");
  }
  return {best->epsilon, best->gamma, best->score};
}

SmoothingChoice gcv_smoothing(std::span<const ObservedCurve> curves, TimeKernelKind kind,
                              std::span<const double> eps_grid,
                              std::span<const double> gamma_grid) {
  const auto scores = gcv_smoothing_scores(curves, kind, eps_grid, gamma_grid);
  return select_smoothing(scores);
}

std::vector<double> default_smoothing_eps_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}; }

std::vector<double> default_smoothing_gamma_grid() { return {1, 2, 5, 7, 10, 20, 50}; }

}  // namespace nlffr
