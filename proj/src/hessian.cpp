#include "covkit/hessian.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "covkit/error.hpp"
#include "covkit/parallel.hpp"

namespace covkit {

std::string_view to_string(HessianMethod m) {
  return m == HessianMethod::standard ? "standard" : "quick";
}

namespace {

unsigned worker_count(const Objective& objective, unsigned requested) {
  return objective.concurrent_safe() ? requested : 1u;
}

double checked_eval(const Objective& objective, const Vector& theta) {
  const double v = objective(theta);
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::NonFiniteValue,
                "objective is not finite in cross difference");
  }
  return v;
}

}  // namespace

std::vector<CurvatureEstimate> diagonal_curvatures(const Objective& objective,
                                                   const Vector& theta_hat,
                                                   double f_hat,
                                                   const HessianOptions& opts) {
  const auto n = static_cast<std::size_t>(theta_hat.size());
  std::vector<CurvatureEstimate> out(n);
  parallel_for(n, worker_count(objective, opts.threads), [&](std::size_t i) {
    const Vector axis = Vector::Unit(theta_hat.size(), static_cast<Eigen::Index>(i));
    try {
      out[i] = curvature_along(objective, theta_hat, axis, f_hat, opts.curvature);
    } catch (const Error& e) {
      throw Error(e.kind(),
                  "coordinate " + std::to_string(i) + ": " + e.what(), i);
    }
  });
  return out;
}

double cross_difference(const Objective& objective, const Vector& theta_hat,
                        std::size_t i, std::size_t j, double h_i, double h_j) {
  if (i == j) {
    throw Error(ErrorKind::InvalidArgument, "cross difference needs i != j");
  }
  if (!(h_i > 0.0) || !(h_j > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "cross difference steps must be > 0");
  }
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  auto at = [&](double si, double sj) {
    Vector p = theta_hat;
    p[ii] += si * h_i;
    p[jj] += sj * h_j;
    return checked_eval(objective, p);
  };
  const double pp = at(+1, +1);
  const double mm = at(-1, -1);
  const double pm = at(+1, -1);
  const double mp = at(-1, +1);
  return ((pp + mm) - (pm + mp)) / (4.0 * h_i * h_j);
}

double offdiag_element(const Objective& objective, const Vector& theta_hat,
                       std::size_t i, std::size_t j, double h_i, double h_j,
                       bool richardson) {
  const double coarse = cross_difference(objective, theta_hat, i, j, h_i, h_j);
  if (!richardson) return coarse;
  const double fine =
      cross_difference(objective, theta_hat, i, j, h_i / 2.0, h_j / 2.0);
  return (4.0 * fine - coarse) / 3.0;
}

HessianResult assemble_hessian(const Objective& objective,
                               const Vector& theta_hat,
                               const HessianOptions& opts) {
  const auto n = static_cast<std::size_t>(theta_hat.size());
  if (n != objective.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                "theta_hat does not match objective dimension");
  }
  const double f_hat = objective(theta_hat);
  if (!std::isfinite(f_hat)) {
    throw Error(ErrorKind::NonFiniteValue, "objective is not finite at theta_hat");
  }

  HessianResult out;
  out.method = opts.method;
  out.f_hat = f_hat;
  out.matrix = Matrix::Zero(theta_hat.size(), theta_hat.size());
  out.steps.resize(theta_hat.size());
  out.diag_errors.resize(theta_hat.size());

  const auto diag = diagonal_curvatures(objective, theta_hat, f_hat, opts);
  out.diagonal_evaluations = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.matrix(k, k) = diag[i].value;
    out.steps[k] = diag[i].step;
    out.diag_errors[k] = diag[i].error_estimate;
    out.diagonal_evaluations += diag[i].evaluations;
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  const bool richardson = opts.method == HessianMethod::standard;
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), worker_count(objective, opts.threads),
               [&](std::size_t p) {
                 const auto [i, j] = pairs[p];
                 values[p] = offdiag_element(
                     objective, theta_hat, i, j,
                     out.steps[static_cast<Eigen::Index>(i)],
                     out.steps[static_cast<Eigen::Index>(j)], richardson);
               });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto i = static_cast<Eigen::Index>(pairs[p].first);
    const auto j = static_cast<Eigen::Index>(pairs[p].second);
    out.matrix(i, j) = values[p];
    out.matrix(j, i) = values[p];
  }

  out.offdiag_evaluations = pairs.size() * (richardson ? 8 : 4);
  out.evaluations = out.diagonal_evaluations + out.offdiag_evaluations;
  return out;
}

}  // namespace covkit
