#include "covkit/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "covkit/error.hpp"
#include "covkit/minimize.hpp"
#include "covkit/models.hpp"
#include "covkit/parallel.hpp"
#include "covkit/spectral.hpp"

namespace covkit {

std::string_view to_string(WeightConvention c) {
  return c == WeightConvention::consistent ? "consistent" : "paper";
}

WeightConvention parse_convention(std::string_view s) {
  if (s == "consistent") return WeightConvention::consistent;
  if (s == "paper") return WeightConvention::paper;
  throw Error(ErrorKind::ConfigError,
              "unknown weight convention '" + std::string(s) + "'");
}

Proposal Proposal::from(const Vector& theta_hat, double f_hat,
                        const Matrix& precision, const Matrix& covariance) {
  Proposal p;
  p.theta_hat = theta_hat;
  p.f_hat = f_hat;
  p.precision = precision;
  p.covariance = covariance;
  p.lower = cholesky(covariance);
  return p;
}

namespace {

double quadratic_log_term(const Proposal& p, const Vector& y, int nu,
                          WeightConvention convention) {
  const double d = convention == WeightConvention::consistent ? nu : nu - 2.0;
  const double q = y.dot(p.precision * y);
  const auto n = static_cast<double>(y.size());
  return 0.5 * (n + nu) * std::log1p(q / d);
}

double sample_variance_of_mean(double sum_sq, std::size_t n) {
  if (n < 2) return 0.0;
  return sum_sq / static_cast<double>(n - 1) / static_cast<double>(n);
}

}  // namespace

double log_weight(const Objective& objective, const Proposal& proposal,
                  const Vector& y, int nu, WeightConvention convention) {
  const double f = objective(proposal.theta_hat + y);
  if (!std::isfinite(f)) {
    throw Error(ErrorKind::NonFiniteValue,
                "objective is not finite at a proposal point");
  }
  return -(f - proposal.f_hat) + quadratic_log_term(proposal, y, nu, convention);
}

BatchResult run_batch(const Objective& objective, const Proposal& proposal,
                      int nu, std::size_t n_sims, RngStream& rng,
                      const BatchOptions& opts,
                      std::span<const Functional> functionals) {
  if (nu < 3) throw Error(ErrorKind::InvalidArgument, "nu must be >= 3");
  const Eigen::Index n = proposal.theta_hat.size();
  const std::size_t n_fun = functionals.size();

  BatchResult out;
  out.nu = nu;
  out.n_sims = n_sims;
  out.evaluations = 2 * n_sims;
  if (n_sims == 0) {
    throw Error(ErrorKind::AllWeightsZero, "batch has no simulations");
  }

  // Draws are sequential in the stream; only objective calls run in parallel.
  std::vector<Vector> ys(n_sims);
  for (auto& y : ys) y = mvt_draw(rng, proposal.lower, nu).y;

  std::vector<double> f_plus(n_sims), f_minus(n_sims);
  const unsigned workers = objective.concurrent_safe() ? opts.threads : 1u;
  parallel_for(n_sims, workers, [&](std::size_t i) {
    f_plus[i] = objective(proposal.theta_hat + ys[i]);
    f_minus[i] = objective(proposal.theta_hat - ys[i]);
  });

  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> lw_plus(n_sims), lw_minus(n_sims);
  double max_lw = neg_inf;
  for (std::size_t i = 0; i < n_sims; ++i) {
    const double quad = quadratic_log_term(proposal, ys[i], nu, opts.convention);
    auto lw = [&](double f) {
      if (!std::isfinite(f)) {
        ++out.rejections;
        return neg_inf;
      }
      const double v = -(f - proposal.f_hat) + quad;
      if (!std::isfinite(v)) {
        ++out.rejections;
        return neg_inf;
      }
      return v;
    };
    lw_plus[i] = lw(f_plus[i]);
    lw_minus[i] = lw(f_minus[i]);
    max_lw = std::max({max_lw, lw_plus[i], lw_minus[i]});
  }
  if (max_lw == neg_inf) {
    throw Error(ErrorKind::AllWeightsZero, "every proposal point was rejected");
  }

  std::vector<double> a(n_sims), b(n_sims), w1(n_sims), w2(n_sims);
  double a_sum = 0.0;
  Vector b_y = Vector::Zero(n);
  Matrix a_yy = Matrix::Zero(n, n);
  Matrix yy = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n_sims; ++i) {
    w1[i] = std::exp(lw_plus[i] - max_lw);
    w2[i] = std::exp(lw_minus[i] - max_lw);
    a[i] = w1[i] + w2[i];
    b[i] = w1[i] - w2[i];
    a_sum += a[i];
    b_y += b[i] * ys[i];
    a_yy.selfadjointView<Eigen::Lower>().rankUpdate(ys[i], a[i]);
    yy.selfadjointView<Eigen::Lower>().rankUpdate(ys[i], 1.0);
  }
  a_yy = a_yy.selfadjointView<Eigen::Lower>();
  yy = yy.selfadjointView<Eigen::Lower>();
  if (!(a_sum > 0.0)) {
    throw Error(ErrorKind::AllWeightsZero, "importance weights sum to zero");
  }

  const auto count = static_cast<double>(n_sims);
  const double a_bar = a_sum / count;
  const double c_nu = (nu - 2.0) / nu;
  const bool consistent = opts.convention == WeightConvention::consistent;
  const double first_factor = consistent ? 1.0 : c_nu;

  out.delta_mean = b_y / a_sum;
  const Matrix first = first_factor * a_yy / a_sum;
  const Matrix yy_mean = yy / count;
  const Matrix control = proposal.covariance - c_nu * yy_mean;

  // Second pass: linearized per-pair contributions for the error estimates.
  Vector delta_ss = Vector::Zero(n);
  Matrix saa = Matrix::Zero(n, n), sab = Matrix::Zero(n, n),
         sbb = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n_sims; ++i) {
    const Vector& y = ys[i];
    const Vector ed = (b[i] * y - out.delta_mean * a[i]) / a_bar;
    delta_ss += ed.cwiseAbs2();
    const Matrix y_outer = y * y.transpose();
    const Matrix ea = (first_factor * a[i] * y_outer - first * a[i]) / a_bar;
    const Matrix eb = c_nu * (y_outer - yy_mean);
    saa += ea.cwiseAbs2();
    sab += ea.cwiseProduct(eb);
    sbb += eb.cwiseAbs2();
  }

  Matrix beta = Matrix::Zero(n, n);
  if (opts.control_variate) {
    if (consistent) {
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
          beta(j, k) = sbb(j, k) > 0.0 ? sab(j, k) / sbb(j, k) : 0.0;
    } else {
      beta.setOnes();
    }
  }
  out.control_coefficients = beta;

  out.v_tilde = first + beta.cwiseProduct(control) -
                out.delta_mean * out.delta_mean.transpose();
  out.v_tilde = 0.5 * (out.v_tilde + out.v_tilde.transpose()).eval();
  out.trace = out.v_tilde.trace();

  out.delta_variance.resize(n);
  for (Eigen::Index k = 0; k < n; ++k)
    out.delta_variance[k] = sample_variance_of_mean(delta_ss[k], n_sims);
  out.v_variance.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const double ss = saa(j, k) - 2.0 * beta(j, k) * sab(j, k) +
                        beta(j, k) * beta(j, k) * sbb(j, k);
      out.v_variance(j, k) = sample_variance_of_mean(std::max(ss, 0.0), n_sims);
    }

  // Trace: the per-pair sum of diagonal contributions, third pass.
  double trace_ss = 0.0;
  for (std::size_t i = 0; i < n_sims; ++i) {
    double e = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double yj2 = ys[i][j] * ys[i][j];
      const double ea = (first_factor * a[i] * yj2 - first(j, j) * a[i]) / a_bar;
      const double eb = c_nu * (yj2 - yy_mean(j, j));
      e += ea - beta(j, j) * eb;
    }
    trace_ss += e * e;
  }
  out.trace_error = std::sqrt(sample_variance_of_mean(trace_ss, n_sims));

  out.functional_means.resize(static_cast<Eigen::Index>(n_fun));
  out.functional_variances.resize(static_cast<Eigen::Index>(n_fun));
  for (std::size_t g = 0; g < n_fun; ++g) {
    std::vector<double> u(n_sims, 0.0);
    double u_sum = 0.0;
    for (std::size_t i = 0; i < n_sims; ++i) {
      if (w1[i] > 0.0) u[i] += w1[i] * functionals[g](proposal.theta_hat + ys[i]);
      if (w2[i] > 0.0) u[i] += w2[i] * functionals[g](proposal.theta_hat - ys[i]);
      u_sum += u[i];
    }
    const double mean = u_sum / a_sum;
    double ss = 0.0;
    for (std::size_t i = 0; i < n_sims; ++i) {
      const double e = (u[i] - mean * a[i]) / a_bar;
      ss += e * e;
    }
    const auto gi = static_cast<Eigen::Index>(g);
    out.functional_means[gi] = mean;
    out.functional_variances[gi] = sample_variance_of_mean(ss, n_sims);
  }

  if (opts.keep_samples) {
    out.samples = std::move(ys);
    out.log_w_plus = std::move(lw_plus);
    out.log_w_minus = std::move(lw_minus);
  }
  return out;
}

NuSchedule::NuSchedule(int nu0) : nu_(nu0) {
  if (nu0 < 3) throw Error(ErrorKind::InvalidArgument, "nu0 must be >= 3");
}

int NuSchedule::record(double trace_error) {
  if (frozen_) return nu_;
  if (has_previous_ && trace_error > previous_error_) {
    nu_ = previous_nu_;
    frozen_ = true;
    return nu_;
  }
  has_previous_ = true;
  previous_error_ = trace_error;
  previous_nu_ = nu_;
  nu_ = static_cast<int>(std::lround(M_SQRT2 * nu_));
  return nu_;
}

Pooled pool_inverse_variance(std::span<const double> values,
                             std::span<const double> variances) {
  if (values.size() != variances.size() || values.empty()) {
    throw Error(ErrorKind::DimensionMismatch,
                "pooling needs matching, non-empty value and variance lists");
  }
  std::size_t exact = 0;
  double exact_sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (variances[i] == 0.0) {
      ++exact;
      exact_sum += values[i];
    }
  }
  if (exact > 0) return {exact_sum / static_cast<double>(exact), 0.0};

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += values[i] / variances[i];
    den += 1.0 / variances[i];
  }
  return {num / den, 1.0 / den};
}

PosteriorResult adaptive_posterior(const Objective& objective,
                                   const Proposal& proposal,
                                   const PosteriorOptions& opts) {
  if (opts.n_batches < 2) {
    throw Error(ErrorKind::InsufficientBatches,
                "adaptive posterior needs at least 2 batches");
  }
  if (opts.nu0 < 3) throw Error(ErrorKind::InvalidArgument, "nu0 must be >= 3");
  if (opts.batch_size < 100) {
    throw Error(ErrorKind::InvalidArgument, "batch size must be >= 100");
  }

  BatchOptions bopts;
  bopts.convention = opts.convention;
  bopts.control_variate = opts.control_variate;
  bopts.threads = opts.threads;

  PosteriorResult out;
  NuSchedule schedule(opts.nu0);
  for (int k = 0; k < opts.n_batches; ++k) {
    RngStream rng(opts.seed, static_cast<std::uint64_t>(k));
    out.batches.push_back(run_batch(objective, proposal, schedule.current(),
                                    opts.batch_size, rng, bopts,
                                    opts.functionals));
    const auto& last = out.batches.back();
    out.total_evaluations += last.evaluations;
    out.rejections += last.rejections;
    schedule.record(last.trace_error);
  }

  const Eigen::Index n = proposal.theta_hat.size();
  const std::size_t s = out.batches.size();
  std::vector<double> vals(s), vars(s);
  auto pool = [&](auto&& value_of, auto&& variance_of) {
    for (std::size_t i = 0; i < s; ++i) {
      vals[i] = value_of(out.batches[i]);
      vars[i] = variance_of(out.batches[i]);
    }
    return pool_inverse_variance(vals, vars);
  };

  out.delta_mean.resize(n);
  out.theta_error.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto p = pool([k](const BatchResult& b) { return b.delta_mean[k]; },
                        [k](const BatchResult& b) { return b.delta_variance[k]; });
    out.delta_mean[k] = p.value;
    out.theta_error[k] = std::sqrt(p.variance);
  }
  out.theta_tilde = proposal.theta_hat + out.delta_mean;

  out.v_tilde.resize(n, n);
  out.v_error.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto p =
          pool([j, k](const BatchResult& b) { return b.v_tilde(j, k); },
               [j, k](const BatchResult& b) { return b.v_variance(j, k); });
      out.v_tilde(j, k) = p.value;
      out.v_error(j, k) = std::sqrt(p.variance);
    }

  const auto n_fun = static_cast<Eigen::Index>(opts.functionals.size());
  out.functional_means.resize(n_fun);
  out.functional_errors.resize(n_fun);
  for (Eigen::Index g = 0; g < n_fun; ++g) {
    const auto p =
        pool([g](const BatchResult& b) { return b.functional_means[g]; },
             [g](const BatchResult& b) { return b.functional_variances[g]; });
    out.functional_means[g] = p.value;
    out.functional_errors[g] = std::sqrt(p.variance);
  }
  return out;
}

NormalCheck normal_sample_check(std::span<const double> data,
                                const PosteriorOptions& opts) {
  if (data.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, "normal check needs m >= 3");
  }
  const NormalModel model(std::vector<double>(data.begin(), data.end()));
  const Vector theta_hat = fit_mle(model, model.default_start()).theta;

  CovarianceOptions copts;
  copts.polish = true;
  copts.hessian.threads = opts.threads;
  const auto [hess, cov] = covariance_from_hessian(model, theta_hat, copts);
  const auto proposal =
      Proposal::from(theta_hat, hess.f_hat, cov.precision(), cov.covariance);

  PosteriorOptions popts = opts;
  popts.functionals.insert(popts.functionals.begin(), [](const Vector& t) {
    return std::exp(2.0 * t[1]);
  });

  NormalCheck out;
  out.theta_hat = theta_hat;
  out.posterior = adaptive_posterior(model, proposal, popts);
  out.estimate = out.posterior.functional_means[0];
  out.standard_error = out.posterior.functional_errors[0];
  return out;
}

}  // namespace covkit
