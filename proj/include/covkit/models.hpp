#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "covkit/objective.hpp"

namespace covkit {

/// A negative log-likelihood with an analytic Hessian oracle. Evaluation is
/// pure given the dataset and parameters.
class Model : public Objective {
 public:
  virtual std::string_view name() const = 0;
  virtual Matrix analytic_hessian(const Vector& theta) const = 0;
  virtual Vector default_start() const = 0;
  virtual std::vector<std::string> parameter_names() const = 0;
  bool concurrent_safe() const override { return true; }
};

// ---------------------------------------------------------------------------
// 0.5 theta' A theta + b' theta + c

class QuadraticModel final : public Model {
 public:
  QuadraticModel(Matrix a, Vector b, double c);

  std::string_view name() const override { return "quadratic"; }
  std::size_t dimension() const override { return static_cast<std::size_t>(b_.size()); }
  double operator()(const Vector& theta) const override;
  Matrix analytic_hessian(const Vector&) const override { return a_; }
  Vector default_start() const override { return Vector::Zero(b_.size()); }
  std::vector<std::string> parameter_names() const override;

  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  double c() const { return c_; }
  Vector minimizer() const;

 private:
  Matrix a_;
  Vector b_;
  double c_;
};

// ---------------------------------------------------------------------------
// iid normal sample, parameters (mu, log sigma)

class NormalModel final : public Model {
 public:
  explicit NormalModel(std::vector<double> data);

  std::string_view name() const override { return "normal"; }
  std::size_t dimension() const override { return 2; }
  double operator()(const Vector& theta) const override;
  Matrix analytic_hessian(const Vector& theta) const override;
  Vector default_start() const override;
  std::vector<std::string> parameter_names() const override {
    return {"mu", "log_sigma"};
  }

  const std::vector<double>& data() const { return data_; }

 private:
  std::vector<double> data_;
};

std::vector<double> synthesize_normal(double mu, double sigma, std::size_t m,
                                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Proportional odds with three ordered groups. Parameters are the covariate
// coefficients beta, then gamma1, then log(gap) where the second cutpoint is
// gamma1 + gap:
//   P1  = 1 / (1 + exp(-z - gamma1))
//   P<3 = 1 / (1 + exp(-z - gamma1 - gap))

struct PoData {
  Matrix covariates;        // N x p
  std::vector<int> groups;  // values in {1, 2, 3}
};

struct PoProbabilities {
  double p1, p2, p3;
};

PoProbabilities po_probabilities(double z, double gamma1, double log_gap);

class PoModel final : public Model {
 public:
  explicit PoModel(PoData data);

  std::string_view name() const override { return "po"; }
  std::size_t dimension() const override { return covariate_count() + 2; }
  double operator()(const Vector& theta) const override;
  Matrix analytic_hessian(const Vector& theta) const override;
  Vector default_start() const override;
  std::vector<std::string> parameter_names() const override;

  std::size_t covariate_count() const {
    return static_cast<std::size_t>(data_.covariates.cols());
  }
  const PoData& data() const { return data_; }

 private:
  PoData data_;
};

inline constexpr std::size_t kPoCovariates = 13;

/// The 15-parameter generating point for synthetic proportional-odds data.
Vector po_default_truth();

/// 13 covariates: six binary indicators then seven standard normals.
PoData synthesize_po(const Vector& true_theta, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Team-strength model for game scores. Team 0 has strength 1; parameters are
// log alpha for teams 1..T-1, then log k, log delta, log sigma_s, log sigma_d.
//   t1 = delta^home * alpha1 / (k alpha2),  t2 = alpha2 / (k alpha1)
// Sum and difference of scores are independent normals.

struct Game {
  std::size_t team1 = 0;
  std::size_t team2 = 0;
  double score1 = 0.0;
  double score2 = 0.0;
  bool home = false;
};

struct BasketballData {
  std::size_t n_teams = 0;
  std::vector<Game> games;
  std::vector<std::string> team_names;  // optional, index-aligned
};

class BasketballModel final : public Model {
 public:
  explicit BasketballModel(BasketballData data);

  std::string_view name() const override { return "basketball"; }
  std::size_t dimension() const override { return data_.n_teams + 3; }
  double operator()(const Vector& theta) const override;
  Matrix analytic_hessian(const Vector& theta) const override;
  Vector default_start() const override;
  std::vector<std::string> parameter_names() const override;

  /// Mean scores of one game at theta.
  std::pair<double, double> mean_scores(const Game& g, const Vector& theta) const;
  /// Likelihood contribution of one game (not negated, not logged).
  double game_density(const Game& g, const Vector& theta) const;

  const BasketballData& data() const { return data_; }

 private:
  BasketballData data_;
};

Vector basketball_default_truth(std::size_t n_teams, std::uint64_t seed);

BasketballData synthesize_basketball(const Vector& true_theta,
                                     std::size_t n_teams, std::size_t n_games,
                                     std::uint64_t seed);

}  // namespace covkit
