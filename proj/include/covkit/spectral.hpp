#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "covkit/hessian.hpp"
#include "covkit/objective.hpp"

namespace covkit {

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, matched to values
  int sweeps = 0;
};

struct CovarianceResult {
  Matrix covariance;    // V = vectors * diag(1/values) * vectors^T
  Vector eigenvalues;   // of H, descending, all > 0 after polish/clamp
  Matrix eigenvectors;  // columns
  bool polished = false;
  std::size_t polish_evaluations = 0;
  std::vector<std::size_t> polish_failures;  // directions left unpolished
  std::vector<std::size_t> clamped_indices;

  /// vectors * diag(values) * vectors^T, the exact inverse of `covariance`.
  Matrix precision() const;
};

struct EigenOptions {
  int max_sweeps = 100;
  double tolerance = 1e-14;  // off-diagonal sum relative to |H|_F
};

/// Cyclic Jacobi rotations. Eigenvector signs are fixed so the largest-magnitude
/// component of each column is positive.
SymmetricEigen eigen_sym(const Matrix& h, const EigenOptions& opts = {});

struct PolishResult {
  Vector values;
  std::size_t evaluations = 0;
  std::vector<std::size_t> failed;  // directions where curvature_along threw
};

/// Replaces each eigenvalue by the directional curvature along its
/// eigenvector; `fallback` supplies the value kept for failed directions.
PolishResult polish_eigenvalues(const Objective& objective,
                                const Vector& theta_hat,
                                const Matrix& eigenvectors,
                                const Vector& fallback, double f_hat,
                                unsigned threads = 1,
                                const CurvatureOptions& curvature = {});

/// Floors non-positive eigenvalues at sqrt(eps) * max(max_value, 1), records
/// them and inverts in the diagonal frame.
CovarianceResult covariance_from_spectrum(Vector eigenvalues,
                                          Matrix eigenvectors);

struct CovarianceOptions {
  HessianOptions hessian;
  bool polish = false;
};

std::pair<HessianResult, CovarianceResult> covariance_from_hessian(
    const Objective& objective, const Vector& theta_hat,
    const CovarianceOptions& opts = {});

}  // namespace covkit
