#include "covkit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "covkit/error.hpp"
#include "covkit/parallel.hpp"

namespace covkit {

Matrix CovarianceResult::precision() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

namespace {

double offdiag_sum(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += std::abs(a(i, j));
  return s;
}

// One Jacobi rotation zeroing a(p, q); accumulates into v.
void rotate(Matrix& a, Matrix& v, Eigen::Index p, Eigen::Index q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double akp = a(k, p), akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double apk = a(p, k), aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = a(q, p) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double vkp = v(k, p), vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymmetricEigen eigen_sym(const Matrix& h, const EigenOptions& opts) {
  if (h.rows() != h.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "eigen_sym needs a square matrix");
  }
  const Eigen::Index n = h.rows();
  Matrix a = 0.5 * (h + h.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double target = opts.tolerance * a.norm();

  SymmetricEigen out;
  bool converged = offdiag_sum(a) <= target;
  while (!converged && out.sweeps < opts.max_sweeps) {
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) rotate(a, v, p, q);
    converged = offdiag_sum(a) <= target;
  }
  if (!converged) {
    throw Error(ErrorKind::NoConvergence,
                "Jacobi eigensolver did not converge in " +
                    std::to_string(opts.max_sweeps) + " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
    return a(x, x) > a(y, y);
  });

  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    Vector col = v.col(src);
    Eigen::Index big = 0;
    col.cwiseAbs().maxCoeff(&big);
    if (col[big] < 0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

PolishResult polish_eigenvalues(const Objective& objective,
                                const Vector& theta_hat,
                                const Matrix& eigenvectors,
                                const Vector& fallback, double f_hat,
                                unsigned threads,
                                const CurvatureOptions& curvature) {
  const auto n = static_cast<std::size_t>(eigenvectors.cols());
  std::vector<CurvatureEstimate> est(n);
  std::vector<char> ok(n, 0);
  const CountingObjective counted(objective);
  const unsigned workers = objective.concurrent_safe() ? threads : 1u;
  parallel_for(n, workers, [&](std::size_t k) {
    const Vector u = eigenvectors.col(static_cast<Eigen::Index>(k)).normalized();
    try {
      est[k] = curvature_along(counted, theta_hat, u, f_hat, curvature);
      ok[k] = 1;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::FlatDirection &&
          e.kind() != ErrorKind::LostPrecision)
        throw;
    }
  });

  PolishResult out;
  out.values = fallback;
  out.evaluations = counted.calls();
  for (std::size_t k = 0; k < n; ++k) {
    if (ok[k]) {
      out.values[static_cast<Eigen::Index>(k)] = est[k].value;
    } else {
      out.failed.push_back(k);
    }
  }
  return out;
}

CovarianceResult covariance_from_spectrum(Vector eigenvalues,
                                          Matrix eigenvectors) {
  const Eigen::Index n = eigenvalues.size();
  if (n == 0 || eigenvalues.maxCoeff() <= 0.0) {
    throw Error(ErrorKind::DegenerateHessian,
                "Hessian has no positive eigenvalue");
  }

  // Re-sort: polish can reorder the spectrum.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
    return eigenvalues[x] > eigenvalues[y];
  });

  CovarianceResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues[k] = eigenvalues[order[static_cast<std::size_t>(k)]];
    out.eigenvectors.col(k) = eigenvectors.col(order[static_cast<std::size_t>(k)]);
  }

  const double floor = std::sqrt(std::numeric_limits<double>::epsilon()) *
                       std::max(out.eigenvalues[0], 1.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (out.eigenvalues[k] <= 0.0) {
      out.eigenvalues[k] = floor;
      out.clamped_indices.push_back(static_cast<std::size_t>(k));
    }
  }

  const Vector inv = out.eigenvalues.cwiseInverse();
  out.covariance =
      out.eigenvectors * inv.asDiagonal() * out.eigenvectors.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

std::pair<HessianResult, CovarianceResult> covariance_from_hessian(
    const Objective& objective, const Vector& theta_hat,
    const CovarianceOptions& opts) {
  auto hess = assemble_hessian(objective, theta_hat, opts.hessian);
  auto eig = eigen_sym(hess.matrix);

  Vector values = eig.values;
  std::size_t polish_evals = 0;
  std::vector<std::size_t> failures;
  if (opts.polish) {
    auto pol = polish_eigenvalues(objective, theta_hat, eig.vectors, values,
                                  hess.f_hat, opts.hessian.threads,
                                  opts.hessian.curvature);
    values = pol.values;
    polish_evals = pol.evaluations;
    failures = std::move(pol.failed);
  }

  auto cov = covariance_from_spectrum(std::move(values), std::move(eig.vectors));
  cov.polished = opts.polish;
  cov.polish_evaluations = polish_evals;
  cov.polish_failures = std::move(failures);
  return {std::move(hess), std::move(cov)};
}

}  // namespace covkit
