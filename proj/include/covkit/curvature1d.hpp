#pragma once

#include <cstddef>
#include <optional>

#include "covkit/objective.hpp"

namespace covkit {

/// The objective restricted to the line base_point + t * direction.
class LineFunction {
 public:
  /// Throws InvalidArgument unless |direction| = 1 within 1e-12.
  LineFunction(const Objective& objective, Vector base_point, Vector direction);

  double operator()(double offset) const;

  const Vector& base_point() const { return base_; }
  const Vector& direction() const { return dir_; }

 private:
  const Objective& objective_;
  Vector base_;
  Vector dir_;
};

struct CurvatureEstimate {
  double value = 0.0;           // second derivative along the line
  double step = 0.0;            // step length of the best tableau entry
  double error_estimate = 0.0;  // absolute
  std::size_t evaluations = 0;  // objective calls made for this estimate
};

struct InitialScale {
  double step = 0.0;   // first doubled h bracketing the minimum
  double sigma = 0.0;  // h / sqrt(g(h) - 2 g(0) + g(-h))
  std::size_t evaluations = 0;
};

struct CurvatureOptions {
  int max_doublings = 60;
  int max_restarts = 3;
  int max_rows = 10;         // Ridders tableau size
  double safety = 2.0;       // stop once a row's best error exceeds safety x best so far
};

/// Doubling search from h = eps^(1/4) until g(+h) > g(0) and g(-h) > g(0).
/// `g0` is g(0), evaluated by the caller. Evaluation count excludes g0.
InitialScale find_initial_scale(const LineFunction& g, double g0,
                                const CurvatureOptions& opts = {});

/// Ridders extrapolation of central second differences with the step shrunk
/// by sqrt(2) per row. Evaluation count excludes g0.
CurvatureEstimate ridders_curvature(const LineFunction& g, double g0,
                                    double h_start,
                                    const CurvatureOptions& opts = {});

/// Convenience overloads that evaluate g(0) themselves and count it.
InitialScale find_initial_scale(const LineFunction& g,
                                const CurvatureOptions& opts = {});
CurvatureEstimate ridders_curvature(const LineFunction& g, double h_start,
                                    const CurvatureOptions& opts = {});

/// Step search followed by Ridders from sigma/2. When `f_base` is supplied it
/// is used as objective(base_point) and not counted; otherwise it is evaluated
/// once and counted.
CurvatureEstimate curvature_along(const Objective& objective,
                                  const Vector& base_point,
                                  const Vector& direction,
                                  std::optional<double> f_base = std::nullopt,
                                  const CurvatureOptions& opts = {});

}  // namespace covkit
