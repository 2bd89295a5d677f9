#pragma once

#include <cstddef>

#include "covkit/objective.hpp"

namespace covkit {

struct MinimizeOptions {
  int max_iterations = 5000;
  double gradient_tolerance = 1e-6;  // accept when |grad|_inf <= tol (1 + |f|)
  double target_tolerance = 1e-10;   // keep iterating down to this if possible
};

struct MinimizeResult {
  Vector theta;
  double value = 0.0;
  double gradient_norm = 0.0;  // infinity norm of the central-difference gradient
  int iterations = 0;
  std::size_t evaluations = 0;
};

/// Central-difference gradient with step eps^(1/3) max(1, |theta_i|).
Vector numeric_gradient(const Objective& objective, const Vector& theta);

/// BFGS on central-difference gradients with Armijo backtracking. Throws
/// NoConvergence when the accepted gradient criterion is never met.
MinimizeResult fit_mle(const Objective& objective, const Vector& start,
                       const MinimizeOptions& opts = {});

}  // namespace covkit
