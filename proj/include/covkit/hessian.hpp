#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "covkit/curvature1d.hpp"
#include "covkit/objective.hpp"

namespace covkit {

/// Off-diagonal strategy: `standard` extrapolates the cross difference once
/// (8 evaluations per element), `quick` uses the raw cross difference (4).
enum class HessianMethod { standard, quick };

std::string_view to_string(HessianMethod m);

struct HessianResult {
  Matrix matrix;                    // symmetric Hessian of the objective
  Vector steps;                     // per-coordinate optimal step lengths
  Vector diag_errors;               // Ridders error estimates
  double f_hat = 0.0;               // objective(theta_hat)
  std::size_t evaluations = 0;      // total objective calls
  std::size_t diagonal_evaluations = 0;  // includes the single f(theta_hat)
  std::size_t offdiag_evaluations = 0;
  HessianMethod method = HessianMethod::standard;
};

struct HessianOptions {
  HessianMethod method = HessianMethod::standard;
  unsigned threads = 1;  // ignored unless the objective is concurrent-safe
  CurvatureOptions curvature;
};

/// Curvature along each coordinate axis. `f_hat` = objective(theta_hat).
/// Errors carry the failing coordinate in Error::index().
std::vector<CurvatureEstimate> diagonal_curvatures(
    const Objective& objective, const Vector& theta_hat, double f_hat,
    const HessianOptions& opts = {});

/// Four-point central cross difference D(h_i, h_j).
double cross_difference(const Objective& objective, const Vector& theta_hat,
                        std::size_t i, std::size_t j, double h_i, double h_j);

/// D(h_i, h_j), or (4 D(h_i/2, h_j/2) - D(h_i, h_j)) / 3 when `richardson`.
double offdiag_element(const Objective& objective, const Vector& theta_hat,
                       std::size_t i, std::size_t j, double h_i, double h_j,
                       bool richardson);

HessianResult assemble_hessian(const Objective& objective,
                               const Vector& theta_hat,
                               const HessianOptions& opts = {});

}  // namespace covkit
