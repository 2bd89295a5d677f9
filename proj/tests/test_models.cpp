#include <doctest.h>

#include <cmath>
#include <random>

#include "covkit/error.hpp"
#include "covkit/minimize.hpp"
#include "covkit/models.hpp"
#include "covkit/sampler.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace covkit;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

void check_against_fd(const Model& model, const Vector& center, double spread,
                      std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    Vector theta = center;
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += spread * nd(gen);
    const Matrix exact = model.analytic_hessian(theta);
    const Matrix fd = oracle::fd_hessian([&](const Vector& t) { return model(t); }, theta, 1e-4);
    CHECK(exact == exact.transpose());
    CHECK(max_abs(exact - fd) <= 1e-4 * max_abs(exact));
  }
}

}  // namespace

TEST_CASE("objective values by direct substitution") {
  QuadraticModel q(Matrix::Identity(2, 2), Vector::Zero(2), 0.0);
  CHECK(q((Vector(2) << 3, 4).finished()) == 12.5);

  NormalModel normal({-1.0, 1.0});
  CHECK(normal(Vector::Zero(2)) == doctest::Approx(std::log(2 * M_PI) + 1.0).epsilon(1e-15));

  PoData one;
  one.covariates = Matrix::Zero(1, kPoCovariates);
  one.groups = {1};
  PoModel po(one);
  Vector theta = Vector::Zero(kPoCovariates + 2);  // gamma1 = 0, gap = e^0 = 1
  CHECK(po(theta) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("dimensions and parameter names") {
  CHECK(PoModel(synthesize_po(po_default_truth(), 10, 1)).dimension() == 15);
  const auto bb = synthesize_basketball(basketball_default_truth(40, 1), 40, 400, 1);
  BasketballModel m(bb);
  CHECK(m.dimension() == 43);
  CHECK(m.parameter_names().size() == 43);
  CHECK(m.default_start().size() == 43);
}

TEST_CASE("analytic Hessians agree with finite differences") {
  SUBCASE("quadratic") {
    std::mt19937_64 gen(1);
    const Matrix a = oracle::random_spd(4, gen);
    QuadraticModel q(a, Vector::Ones(4), 2.0);
    check_against_fd(q, Vector::Zero(4), 1.0, 2);
  }
  SUBCASE("normal") {
    NormalModel normal(synthesize_normal(1.0, 2.0, 30, 4));
    check_against_fd(normal, (Vector(2) << 1.0, std::log(2.0)).finished(), 0.3, 3);
  }
  SUBCASE("proportional odds") {
    PoModel po(synthesize_po(po_default_truth(), 300, 3));
    check_against_fd(po, po_default_truth(), 0.3, 4);
  }
  SUBCASE("basketball") {
    const auto truth = basketball_default_truth(8, 2);
    BasketballModel bb(synthesize_basketball(truth, 8, 120, 2));
    check_against_fd(bb, truth, 0.05, 5);
  }
}

TEST_CASE("normal Hessian at the maximum likelihood point") {
  const auto x = synthesize_normal(-0.5, 1.5, 25, 9);
  const double m = static_cast<double>(x.size());
  double xbar = 0.0;
  for (double v : x) xbar += v / m;
  double s2 = 0.0;
  for (double v : x) s2 += (v - xbar) * (v - xbar) / m;
  NormalModel model(x);
  const Vector mle = (Vector(2) << xbar, 0.5 * std::log(s2)).finished();
  Matrix expected = Matrix::Zero(2, 2);
  expected.diagonal() << m / s2, 2 * m;
  CHECK(max_abs(model.analytic_hessian(mle) - expected) < 1e-10 * m / s2);
  const Matrix fd = oracle::fd_hessian([&](const Vector& t) { return model(t); }, mle, 1e-4);
  CHECK(max_abs(fd - expected) < 1e-6 * max_abs(expected));
}

TEST_CASE("proportional-odds probabilities form a distribution") {
  // A cumulative probability rounds to exactly 1 once its cut exceeds about
  // 37, so the open interval is only required inside that range.
  RngStream rng(31, 0);
  std::size_t bad = 0, strict = 0;
  for (int k = 0; k < 1'000'000; ++k) {
    const double z = 8.0 * rng.normal();
    const double g1 = 4.0 * rng.normal();
    const double lg = 2.0 * rng.normal();
    const auto p = po_probabilities(z, g1, lg);
    const bool closed = p.p1 >= 0 && p.p1 <= 1 && p.p2 >= 0 && p.p2 <= 1 && p.p3 >= 0 &&
                        p.p3 <= 1 && std::abs(p.p1 + p.p2 + p.p3 - 1.0) < 1e-12;
    bad += !closed;
    if (std::abs(z + g1) < 36.0 && std::abs(z + g1 + std::exp(lg)) < 36.0) {
      ++strict;
      bad += !(p.p1 > 0 && p.p1 < 1 && p.p2 > 0 && p.p2 < 1 && p.p3 > 0 && p.p3 < 1);
    }
  }
  CHECK(bad == 0);
  MESSAGE(strict << " draws inside the representable range");
  CHECK(strict > 900'000);
}

TEST_CASE("proportional-odds probabilities match the logistic cut formulas") {
  for (double z : {-2.0, 0.0, 0.7}) {
    const double g1 = 0.3, gap = 1.5;
    const double p1 = 1.0 / (1.0 + std::exp(-z - g1));
    const double p_lt3 = 1.0 / (1.0 + std::exp(-z - g1 - gap));
    const auto p = po_probabilities(z, g1, std::log(gap));
    CHECK(p.p1 == doctest::Approx(p1).epsilon(1e-14));
    CHECK(p.p2 == doctest::Approx(p_lt3 - p1).epsilon(1e-12));
    CHECK(p.p3 == doctest::Approx(1.0 - p_lt3).epsilon(1e-12));
  }
}

TEST_CASE("basketball likelihood is a bivariate normal in the scores") {
  const std::size_t teams = 6;
  const auto truth = basketball_default_truth(teams, 3);
  const auto data = synthesize_basketball(truth, teams, 50, 3);
  BasketballModel model(data);
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  double total = 0.0;
  for (const auto& g : data.games) {
    Vector theta = truth;
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.05 * nd(gen);
    // Independent evaluation: mean scores and the joint covariance of (X1, X2).
    auto log_alpha = [&](std::size_t team) { return team == 0 ? 0.0 : theta[team - 1]; };
    const double k = std::exp(theta[teams - 1]), delta = std::exp(theta[teams]);
    const double ss = std::exp(theta[teams + 1]), sd = std::exp(theta[teams + 2]);
    const double ratio = std::exp(log_alpha(g.team1) - log_alpha(g.team2));
    const double t1 = (g.home ? delta : 1.0) * ratio / k;
    const double t2 = 1.0 / (ratio * k);
    Matrix cov(2, 2);
    cov << ss * ss + sd * sd, ss * ss - sd * sd, ss * ss - sd * sd, ss * ss + sd * sd;
    cov /= 4.0;
    const Vector r = (Vector(2) << g.score1 - t1, g.score2 - t2).finished();
    const double dens = std::exp(-0.5 * r.dot(cov.inverse() * r)) /
                        (2 * M_PI * std::sqrt(cov.determinant()));
    const double got = model.game_density(g, theta);
    CHECK(std::abs(got - dens) <= 1e-12 * dens);
    const auto [m1, m2] = model.mean_scores(g, theta);
    CHECK(m1 == doctest::Approx(t1).epsilon(1e-14));
    CHECK(m2 == doctest::Approx(t2).epsilon(1e-14));
  }
  for (const auto& g : data.games) total -= std::log(model.game_density(g, truth));
  CHECK(model(truth) == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("synthetic data limits") {
  SUBCASE("overwhelming first cutpoint puts everyone in group 1") {
    Vector truth = po_default_truth();
    truth[kPoCovariates] = 1e3;
    const auto d = synthesize_po(truth, 500, 8);
    for (int g : d.groups) CHECK(g == 1);
  }
  SUBCASE("unit basketball parameters give unit mean scores") {
    BasketballData d;
    d.n_teams = 3;
    d.games = {{0, 1, 0, 0, false}, {2, 0, 0, 0, false}, {1, 2, 0, 0, false}};
    BasketballModel m(d);
    for (const auto& g : d.games) {
      const auto [t1, t2] = m.mean_scores(g, Vector::Zero(6));
      CHECK(t1 == 1.0);
      CHECK(t2 == 1.0);
    }
    const auto home = m.mean_scores({0, 1, 0, 0, true}, Vector::Zero(6));
    CHECK(home.first == 1.0);
  }
  SUBCASE("generators are deterministic per seed") {
    const auto a = synthesize_po(po_default_truth(), 50, 3);
    const auto b = synthesize_po(po_default_truth(), 50, 3);
    CHECK(a.covariates == b.covariates);
    CHECK(a.groups == b.groups);
    CHECK(synthesize_normal(0, 1, 10, 5) == synthesize_normal(0, 1, 10, 5));
    CHECK(synthesize_normal(0, 1, 10, 5) != synthesize_normal(0, 1, 10, 6));
  }
}

TEST_CASE("refit of a synthetic proportional-odds sample recovers the truth") {
  const auto& po = fixture::po_fit();
  const Vector truth = po_default_truth();
  const Matrix cov = po.model.analytic_hessian(po.theta_hat).inverse();
  int covered = 0;
  for (int i = 0; i < 15; ++i) {
    covered += std::abs(po.theta_hat[i] - truth[i]) <= 3.0 * std::sqrt(cov(i, i));
  }
  MESSAGE("parameters within 3 standard errors: " << covered << " of 15");
  CHECK(covered >= 12);
  CHECK(po.model(po.theta_hat) <= po.model(truth));
}

TEST_CASE("minimizer on closed-form problems") {
  SUBCASE("quadratic") {
    std::mt19937_64 gen(14);
    const Matrix a = oracle::random_spd(6, gen);
    Vector b(6);
    b << 1, -2, 0.5, 3, -1, 0.25;
    QuadraticModel q(a, b, 1.0);
    const auto r = fit_mle(q, q.default_start());
    CHECK(max_abs(r.theta - (-a.ldlt().solve(b))) < 1e-8);
    CHECK(max_abs(q.minimizer() - (-a.ldlt().solve(b))) < 1e-12);
  }
  SUBCASE("normal") {
    const auto x = synthesize_normal(2.0, 0.7, 40, 12);
    const double m = static_cast<double>(x.size());
    double xbar = 0.0;
    for (double v : x) xbar += v / m;
    double s2 = 0.0;
    for (double v : x) s2 += (v - xbar) * (v - xbar) / m;
    NormalModel model(x);
    const auto r = fit_mle(model, model.default_start());
    CHECK(std::abs(r.theta[0] - xbar) < 1e-6);
    CHECK(std::abs(r.theta[1] - 0.5 * std::log(s2)) < 1e-6);
    CHECK(r.gradient_norm <= 1e-6 * (1.0 + std::abs(r.value)));
  }
}

TEST_CASE("models reject parameters of the wrong size") {
  NormalModel model({1.0, 2.0});
  CHECK_THROWS_AS(model(Vector::Zero(3)), Error);
}
