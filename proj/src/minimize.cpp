#include "covkit/minimize.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "covkit/error.hpp"

namespace covkit {

Vector numeric_gradient(const Objective& objective, const Vector& theta) {
  const double eps = std::numeric_limits<double>::epsilon();
  Vector g(theta.size());
  Vector p = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double h = std::cbrt(eps) * std::max(1.0, std::abs(theta[i]));
    p[i] = theta[i] + h;
    const double up = objective(p);
    p[i] = theta[i] - h;
    const double down = objective(p);
    p[i] = theta[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

namespace {

// Overflowing trial points are rejected by the line search, not fatal.
double value_or_inf(const Objective& f, const Vector& x) {
  try {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonFiniteValue) throw;
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

MinimizeResult fit_mle(const Objective& objective, const Vector& start,
                       const MinimizeOptions& opts) {
  const CountingObjective f(objective);
  const Eigen::Index n = start.size();

  MinimizeResult r;
  r.theta = start;
  r.value = f(r.theta);
  if (!std::isfinite(r.value)) {
    throw Error(ErrorKind::NonFiniteValue, "objective not finite at start point");
  }
  Vector g = numeric_gradient(f, r.theta);
  Matrix inv_h = Matrix::Identity(n, n);
  bool fresh = true;

  auto converged = [&](double tol) {
    return g.lpNorm<Eigen::Infinity>() <= tol * (1.0 + std::abs(r.value));
  };

  for (; r.iterations < opts.max_iterations; ++r.iterations) {
    if (converged(opts.target_tolerance)) break;

    Vector p = -inv_h * g;
    if (g.dot(p) >= 0.0) {
      inv_h.setIdentity();
      fresh = true;
      p = -g;
    }

    const double slope = g.dot(p);
    double step = 1.0;
    double trial_value = std::numeric_limits<double>::infinity();
    Vector trial;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      trial = r.theta + step * p;
      trial_value = value_or_inf(f, trial);
      if (std::isfinite(trial_value) &&
          trial_value <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!fresh) {
        inv_h.setIdentity();
        fresh = true;
        continue;
      }
      break;  // no descent even along -g: at the noise floor
    }

    const Vector s = trial - r.theta;
    const Vector g_new = numeric_gradient(f, trial);
    const Vector y = g_new - g;
    r.theta = trial;
    r.value = trial_value;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) inv_h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(n, n);
      inv_h = (eye - rho * s * y.transpose()) * inv_h *
                  (eye - rho * y * s.transpose()) +
              rho * s * s.transpose();
      fresh = false;
    }
  }

  r.gradient_norm = g.lpNorm<Eigen::Infinity>();
  r.evaluations = f.calls();
  if (!converged(opts.gradient_tolerance)) {
    std::ostringstream msg;
    msg << "minimizer stopped after " << r.iterations
        << " iterations with gradient norm " << r.gradient_norm
        << " at objective " << r.value;
    throw Error(ErrorKind::NoConvergence, msg.str());
  }
  return r;
}

}  // namespace covkit
