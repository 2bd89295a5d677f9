#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "covkit/objective.hpp"
#include "covkit/sampler.hpp"

namespace covkit {

/// How the quadratic term of the importance weight is scaled.
///   consistent: (1 + y'Hy/nu), the exact inverse density of the t draws with
///               scale matrix V; weighted moments need no (nu-2)/nu factor.
///   paper:      (1 + y'Hy/(nu-2)), a (nu-2)/nu factor on the weighted second
///               moment and a unit control coefficient, kept for comparison.
enum class WeightConvention { consistent, paper };

std::string_view to_string(WeightConvention c);
WeightConvention parse_convention(std::string_view s);

/// Everything the sampler needs about the fitted mode.
struct Proposal {
  Vector theta_hat;
  double f_hat = 0.0;  // objective(theta_hat)
  Matrix precision;    // H, consistent with covariance
  Matrix covariance;   // V
  Matrix lower;        // cholesky(V)

  static Proposal from(const Vector& theta_hat, double f_hat,
                       const Matrix& precision, const Matrix& covariance);
};

/// Scalar function of the parameters whose posterior mean is wanted.
using Functional = std::function<double(const Vector&)>;

struct BatchOptions {
  WeightConvention convention = WeightConvention::consistent;
  bool control_variate = true;
  unsigned threads = 1;
  bool keep_samples = false;
};

struct BatchResult {
  int nu = 0;
  std::size_t n_sims = 0;
  Vector delta_mean;        // estimate of theta~ - theta^
  Matrix v_tilde;
  double trace = 0.0;
  double trace_error = 0.0;
  Vector delta_variance;    // per-component variance of delta_mean
  Matrix v_variance;        // per-element variance of v_tilde
  Matrix control_coefficients;
  Vector functional_means;
  Vector functional_variances;
  std::size_t evaluations = 0;
  std::size_t rejections = 0;

  // Populated only with BatchOptions::keep_samples.
  std::vector<Vector> samples;
  std::vector<double> log_w_plus;
  std::vector<double> log_w_minus;
};

struct PosteriorOptions {
  int nu0 = 4;
  int n_batches = 10;
  std::size_t batch_size = 10000;
  WeightConvention convention = WeightConvention::consistent;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool control_variate = true;
  std::vector<Functional> functionals;
};

struct PosteriorResult {
  Vector theta_tilde;
  Matrix v_tilde;
  Vector delta_mean;
  Vector theta_error;  // pooled standard errors
  Matrix v_error;
  Vector functional_means;
  Vector functional_errors;
  std::vector<BatchResult> batches;
  std::size_t total_evaluations = 0;
  std::size_t rejections = 0;

  double rejection_rate() const {
    return total_evaluations
               ? static_cast<double>(rejections) / total_evaluations
               : 0.0;
  }
};

/// log w = -(f(theta^ + y) - f^) + ((n + nu)/2) log(1 + y'Hy / d), with
/// d = nu (consistent) or nu - 2 (paper). Throws NonFiniteValue when the
/// objective is not finite at theta^ + y.
double log_weight(const Objective& objective, const Proposal& proposal,
                  const Vector& y, int nu, WeightConvention convention);

/// One batch of n_sims antithetic pairs drawn from `rng`.
BatchResult run_batch(const Objective& objective, const Proposal& proposal,
                      int nu, std::size_t n_sims, RngStream& rng,
                      const BatchOptions& opts = {},
                      std::span<const Functional> functionals = {});

/// nu adaptation: grow by sqrt(2) (rounded) while the trace error falls; on
/// the first increase revert to the previous nu and freeze.
class NuSchedule {
 public:
  explicit NuSchedule(int nu0);

  int current() const { return nu_; }
  bool frozen() const { return frozen_; }
  /// Feeds the error of the batch just run at current(); returns the nu for
  /// the next batch.
  int record(double trace_error);

 private:
  int nu_;
  int previous_nu_ = 0;
  double previous_error_ = 0.0;
  bool has_previous_ = false;
  bool frozen_ = false;
};

struct Pooled {
  double value = 0.0;
  double variance = 0.0;
};

/// Inverse-variance weighted mean. Estimates with zero variance dominate:
/// when present, their plain mean is returned with variance 0.
Pooled pool_inverse_variance(std::span<const double> values,
                             std::span<const double> variances);

PosteriorResult adaptive_posterior(const Objective& objective,
                                   const Proposal& proposal,
                                   const PosteriorOptions& opts);

struct NormalCheck {
  double estimate = 0.0;        // posterior mean of sigma^2
  double standard_error = 0.0;  // pooled
  Vector theta_hat;
  PosteriorResult posterior;
};

/// Full pipeline on the normal model in (mu, log sigma) with a flat prior;
/// returns the importance-sampled posterior mean of sigma^2.
NormalCheck normal_sample_check(std::span<const double> data,
                                const PosteriorOptions& opts);

}  // namespace covkit
