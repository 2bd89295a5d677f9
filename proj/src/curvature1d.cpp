#include "covkit/curvature1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "covkit/error.hpp"

namespace covkit {

namespace {

double checked(double v, double offset) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::NonFiniteValue,
                "objective is not finite at line offset " +
                    std::to_string(offset));
  }
  return v;
}

// sqrt(2)^-k without accumulating rounding across rows.
double beta_power(int k) {
  return std::ldexp(k % 2 ? M_SQRT1_2 : 1.0, -(k / 2));
}

}  // namespace

LineFunction::LineFunction(const Objective& objective, Vector base_point,
                           Vector direction)
    : objective_(objective),
      base_(std::move(base_point)),
      dir_(std::move(direction)) {
  if (base_.size() != dir_.size() ||
      static_cast<std::size_t>(base_.size()) != objective_.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                "line base point, direction and objective disagree in size");
  }
  if (std::abs(dir_.norm() - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "line direction must be unit norm");
  }
}

double LineFunction::operator()(double offset) const {
  return checked(objective_(base_ + offset * dir_), offset);
}

InitialScale find_initial_scale(const LineFunction& g, double g0,
                                const CurvatureOptions& opts) {
  checked(g0, 0.0);
  const double eps = std::numeric_limits<double>::epsilon();
  InitialScale out;
  double h = std::pow(eps, 0.25);
  int restarts = 0;
  for (int doubling = 0; doubling <= opts.max_doublings; ++doubling, h *= 2) {
    const double up = g(h);
    const double down = g(-h);
    out.evaluations += 2;
    if (!(up > g0 && down > g0)) continue;

    const double second = up - 2.0 * g0 + down;
    if (second > 0.0) {
      out.step = h;
      out.sigma = h / std::sqrt(second);
      return out;
    }
    if (++restarts > opts.max_restarts) {
      throw Error(ErrorKind::LostPrecision,
                  "second difference stays non-positive at bracketing steps");
    }
  }
  throw Error(ErrorKind::FlatDirection,
              "no bracketing step found after " +
                  std::to_string(opts.max_doublings) + " doublings");
}

CurvatureEstimate ridders_curvature(const LineFunction& g, double g0,
                                    double h_start,
                                    const CurvatureOptions& opts) {
  if (!(h_start > 0.0) || !std::isfinite(h_start)) {
    throw Error(ErrorKind::InvalidArgument, "ridders start step must be > 0");
  }
  checked(g0, 0.0);

  const int rows = std::max(2, opts.max_rows);
  // tableau[i][j]: j-times extrapolated estimate ending at step row i.
  std::vector<std::vector<double>> tableau(rows);
  CurvatureEstimate best;
  best.error_estimate = std::numeric_limits<double>::infinity();
  best.step = h_start;

  const double eps = std::numeric_limits<double>::epsilon();
  // Rounding noise of each raw difference, propagated through the same
  // extrapolation weights so deep entries cannot claim more than the data allow.
  std::vector<std::vector<double>> noise(rows);
  auto second_difference = [&](double h, double& rounding) {
    const double up = g(h);
    const double down = g(-h);
    best.evaluations += 2;
    rounding = 4.0 * eps * std::max({std::abs(up), std::abs(g0), std::abs(down)}) /
               (h * h);
    return (up - 2.0 * g0 + down) / (h * h);
  };

  for (int i = 0; i < rows; ++i) {
    const double h = h_start * beta_power(i);
    auto& row = tableau[i];
    row.resize(i + 1);
    noise[i].resize(i + 1);
    row[0] = second_difference(h, noise[i][0]);
    if (i == 0) {
      best.value = row[0];
      continue;
    }

    double row_best = std::numeric_limits<double>::infinity();
    double fac = 2.0;  // beta^2
    for (int j = 1; j <= i; ++j, fac *= 2.0) {
      row[j] = (row[j - 1] * fac - tableau[i - 1][j - 1]) / (fac - 1.0);
      noise[i][j] = (noise[i][j - 1] * fac + noise[i - 1][j - 1]) / (fac - 1.0);
      const double err = std::max({std::abs(row[j] - row[j - 1]),
                                   std::abs(row[j] - tableau[i - 1][j - 1]),
                                   noise[i][j]});
      row_best = std::min(row_best, err);
      if (err <= best.error_estimate) {
        best.error_estimate = err;
        best.value = row[j];
        best.step = h;
      }
    }
    if (row_best > opts.safety * best.error_estimate) break;
  }

  if (!(best.error_estimate <= std::abs(best.value))) {
    throw Error(ErrorKind::LostPrecision,
                "curvature estimate is indistinguishable from noise");
  }
  return best;
}

InitialScale find_initial_scale(const LineFunction& g,
                                const CurvatureOptions& opts) {
  auto out = find_initial_scale(g, g(0.0), opts);
  out.evaluations += 1;
  return out;
}

CurvatureEstimate ridders_curvature(const LineFunction& g, double h_start,
                                    const CurvatureOptions& opts) {
  auto out = ridders_curvature(g, g(0.0), h_start, opts);
  out.evaluations += 1;
  return out;
}

CurvatureEstimate curvature_along(const Objective& objective,
                                  const Vector& base_point,
                                  const Vector& direction,
                                  std::optional<double> f_base,
                                  const CurvatureOptions& opts) {
  const LineFunction g(objective, base_point, direction);
  std::size_t own = 0;
  if (!f_base) {
    f_base = g(0.0);
    own = 1;
  }
  const auto scale = find_initial_scale(g, *f_base, opts);
  auto est = ridders_curvature(g, *f_base, scale.sigma / 2.0, opts);
  est.evaluations += scale.evaluations + own;
  return est;
}

}  // namespace covkit
