#include "covkit/metrics.hpp"

#include <cmath>

#include "covkit/error.hpp"

namespace covkit {

namespace {

void require_same_shape(const Matrix& c, const Matrix& v) {
  if (c.rows() != v.rows() || c.cols() != v.cols() || c.rows() != c.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "compared matrices must be square and of equal size");
  }
}

void require_positive_diagonal(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!(m(i, i) > 0.0)) {
      throw Error(ErrorKind::NonPositiveDiagonal,
                  "diagonal entry " + std::to_string(i) + " is not positive",
                  static_cast<std::size_t>(i));
    }
  }
}

}  // namespace

double frobenius_distance(const Matrix& c, const Matrix& v) {
  require_same_shape(c, v);
  const auto n = static_cast<double>(c.rows());
  return (c - v).cwiseAbs().sum() / (n * n);
}

Matrix correlation_from_covariance(const Matrix& v) {
  require_positive_diagonal(v);
  const Vector inv_sd = v.diagonal().cwiseSqrt().cwiseInverse();
  Matrix r = inv_sd.asDiagonal() * v * inv_sd.asDiagonal();
  r.diagonal().setOnes();
  return r;
}

double stderr_pct_error(const Matrix& c, const Matrix& v) {
  require_same_shape(c, v);
  require_positive_diagonal(c);
  require_positive_diagonal(v);
  const auto n = static_cast<double>(c.rows());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double sc = std::sqrt(c(i, i));
    sum += std::abs((std::sqrt(v(i, i)) - sc) / (n * sc));
  }
  return 100.0 * sum;
}

}  // namespace covkit
