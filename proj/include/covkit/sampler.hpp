#pragma once

#include <cstdint>
#include <utility>

#include "covkit/objective.hpp"

namespace covkit {

/// Counter-based stream: the k-th output depends only on (seed, stream_id, k).
/// Outputs are SplitMix64 applied to a stream key plus a Weyl counter.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal via inverse CDF.
  double normal();
  /// Gamma(shape, scale 1); Marsaglia-Tsang.
  double gamma(double shape);
  /// Chi-squared with `dof` degrees of freedom, as 2 * Gamma(dof / 2).
  double chi_squared(double dof);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Inverse of the standard normal CDF for p in (0, 1).
double normal_quantile(double p);

struct MvtSample {
  Vector y;     // L z / sqrt(chi2 / nu)
  Vector z;     // standard normals
  double chi2;  // chi-squared deviate with nu dof
};

/// Lower-triangular L with L L^T = V. Throws NotPositiveDefinite with the
/// failing pivot as index.
Matrix cholesky(const Matrix& v);

MvtSample mvt_draw(RngStream& rng, const Matrix& lower, int nu);

inline std::pair<Vector, Vector> antithetic_pair(const MvtSample& s) {
  return {s.y, -s.y};
}

}  // namespace covkit
