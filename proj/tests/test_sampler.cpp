#include <doctest.h>

#include <cmath>
#include <random>

#include "covkit/error.hpp"
#include "covkit/sampler.hpp"
#include "oracles.hpp"

using namespace covkit;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Matrix sample_second_moment(const Matrix& lower, int nu, int draws, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const auto n = lower.rows();
  Matrix acc = Matrix::Zero(n, n);
  for (int k = 0; k < draws; ++k) {
    const auto s = mvt_draw(rng, lower, nu);
    acc.noalias() += s.y * s.y.transpose();
  }
  return acc / draws;
}

}  // namespace

TEST_CASE("cholesky examples") {
  CHECK(cholesky(Matrix::Identity(4, 4)) == Matrix::Identity(4, 4));

  Matrix v(2, 2);
  v << 4, 2, 2, 5;
  Matrix l(2, 2);
  l << 2, 0, 1, 2;
  CHECK(max_abs(cholesky(v) - l) < 1e-15);

  std::mt19937_64 gen(10);
  const Matrix r = oracle::random_spd(10, gen);
  const Matrix lr = cholesky(r);
  CHECK(max_abs(lr * lr.transpose() - r) < 1e-12);
  CHECK(max_abs(lr.triangularView<Eigen::StrictlyUpper>().toDenseMatrix()) == 0.0);
}

TEST_CASE("cholesky names the failing pivot") {
  Matrix v(3, 3);
  v << 1, 0, 0, 0, 2, 3, 0, 3, 1;
  try {
    cholesky(v);
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 2);
  }
}

TEST_CASE("normal quantile inverts the normal CDF") {
  for (double p : {1e-300, 1e-12, 1e-4, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97575, 0.999, 1 - 1e-12}) {
    const double x = normal_quantile(p);
    const double back = p < 0.5 ? normal_cdf(x) : 1.0 - normal_cdf(x);
    const double target = p < 0.5 ? p : 1.0 - p;
    CHECK(std::abs(back - target) <= 1e-12 * target);
  }
  CHECK(normal_quantile(0.5) == 0.0);
}

TEST_CASE("streams are deterministic and distinct") {
  RngStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  bool differs_stream = false, differs_seed = false;
  for (int k = 0; k < 100; ++k) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs_stream |= va != c.next_u64();
    differs_seed |= va != d.next_u64();
  }
  CHECK(differs_stream);
  CHECK(differs_seed);
  CHECK(a.position() == 100);

  std::mt19937_64 gen(1);
  const Matrix l = cholesky(oracle::random_spd(4, gen));
  RngStream r1(7, 0), r2(7, 0);
  const auto s1 = mvt_draw(r1, l, 5);
  const auto s2 = mvt_draw(r2, l, 5);
  CHECK(s1.y == s2.y);
  CHECK(s1.z == s2.z);
  CHECK(s1.chi2 == s2.chi2);
}

TEST_CASE("uniforms stay inside the open unit interval") {
  RngStream rng(0, 0);
  for (int k = 0; k < 100000; ++k) {
    const double u = rng.uniform();
    CHECK_UNARY(u > 0.0 && u < 1.0);
  }
}

TEST_CASE("normal and chi-squared moments over a million draws") {
  constexpr int kDraws = 1'000'000;
  RngStream rng(2024, 3);
  double s1 = 0, s2 = 0;
  for (int k = 0; k < kDraws; ++k) {
    const double x = rng.normal();
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / kDraws;
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(s2 / kDraws - mean * mean - 1.0) < 0.01);

  double c1 = 0, c2 = 0;
  for (int k = 0; k < kDraws; ++k) {
    const double x = rng.chi_squared(6);
    CHECK_UNARY(x > 0.0);
    c1 += x;
    c2 += x * x;
  }
  const double cm = c1 / kDraws;
  CHECK(std::abs(cm - 6.0) < 0.06);
  CHECK(std::abs(c2 / kDraws - cm * cm - 12.0) < 0.36);
}

TEST_CASE("gamma with small shape keeps its mean") {
  RngStream rng(5, 5);
  double s = 0;
  constexpr int kDraws = 400000;
  for (int k = 0; k < kDraws; ++k) s += rng.gamma(0.5);
  CHECK(std::abs(s / kDraws - 0.5) < 0.01);
}

TEST_CASE("multivariate t reconstructs from its parts") {
  std::mt19937_64 gen(3);
  const Matrix l = cholesky(oracle::random_spd(5, gen));
  RngStream rng(9, 2);
  for (int k = 0; k < 100; ++k) {
    const auto s = mvt_draw(rng, l, 4);
    const Vector y = l * s.z / std::sqrt(s.chi2 / 4.0);
    CHECK(max_abs(y - s.y) == 0.0);
  }
}

TEST_CASE("multivariate t second moments") {
  SUBCASE("nu = 6 inflates the scale by 3/2") {
    const Matrix m = sample_second_moment(Matrix::Identity(3, 3), 6, 1'000'000, 11);
    CHECK(max_abs(m - 1.5 * Matrix::Identity(3, 3)) < 0.03);
  }
  SUBCASE("large nu approaches the scale matrix") {
    Matrix v(2, 2);
    v << 2.0, 0.6, 0.6, 1.0;
    const Matrix m = sample_second_moment(cholesky(v), 400, 1'000'000, 12);
    const Matrix expected = v * (400.0 / 398.0);
    CHECK(max_abs(m - expected) < 0.02 * 2.0);
    CHECK(max_abs(m - v) < 0.02 * 2.0);
  }
}

TEST_CASE("multivariate t component kurtosis exceeds the normal value") {
  RngStream rng(13, 0);
  const Matrix l = Matrix::Identity(1, 1);
  double s2 = 0, s4 = 0;
  constexpr int kDraws = 1'000'000;
  for (int k = 0; k < kDraws; ++k) {
    const double y = mvt_draw(rng, l, 6).y[0];
    s2 += y * y;
    s4 += y * y * y * y;
  }
  const double kurt = (s4 / kDraws) / std::pow(s2 / kDraws, 2);
  MESSAGE("kurtosis at nu=6: " << kurt);
  CHECK(kurt > 3.5);
}

TEST_CASE("mvt draw rejects nu below three") {
  RngStream rng(1, 1);
  CHECK_THROWS_AS(mvt_draw(rng, Matrix::Identity(2, 2), 2), Error);
}

TEST_CASE("antithetic pairs") {
  MvtSample s{(Vector(2) << 1, -2).finished(), Vector::Zero(2), 1.0};
  auto [plus, minus] = antithetic_pair(s);
  CHECK(plus == s.y);
  CHECK(minus == (Vector(2) << -1, 2).finished());
  CHECK((plus + minus).isZero(0.0));

  s.y = Vector::Zero(2);
  auto [p0, m0] = antithetic_pair(s);
  CHECK(p0.isZero(0.0));
  CHECK(m0.isZero(0.0));
}
