#pragma once

#include <cstddef>
#include <string>

#include "covkit/objective.hpp"

namespace covkit {

/// Accuracy of one method against an analytic oracle.
struct ComparisonReport {
  std::string method;
  double frobenius_hessian = 0.0;  // F between Hessians
  double frobenius_corr = 0.0;     // F between correlation matrices
  double g_pct = 0.0;              // mean percentage error of standard errors
  double time_seconds = 0.0;
  std::size_t evaluations = 0;
};

/// Mean absolute elementwise difference sum |C_ij - V_ij| / n^2. Named after
/// the "Frobenius distance" it stands in for; it is not the usual root of
/// squared differences.
double frobenius_distance(const Matrix& c, const Matrix& v);

/// R_ij = V_ij / sqrt(V_ii V_jj).
Matrix correlation_from_covariance(const Matrix& v);

/// 100 sum_i |sqrt(V_ii) - sqrt(C_ii)| / (n sqrt(C_ii)); C is the reference.
double stderr_pct_error(const Matrix& c, const Matrix& v);

}  // namespace covkit
