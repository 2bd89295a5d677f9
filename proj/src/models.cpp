#include "covkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "covkit/error.hpp"
#include "covkit/sampler.hpp"

namespace covkit {

namespace {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_dim(const Vector& theta, std::size_t n) {
  if (static_cast<std::size_t>(theta.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch,
                "parameter vector has size " + std::to_string(theta.size()) +
                    ", model expects " + std::to_string(n));
  }
}

double finite_or_throw(double v, std::string_view model) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::NonFiniteValue,
                std::string(model) + " negative log-likelihood overflowed");
  }
  return v;
}

}  // namespace

// --- quadratic -------------------------------------------------------------

QuadraticModel::QuadraticModel(Matrix a, Vector b, double c)
    : a_(std::move(a)), b_(std::move(b)), c_(c) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "quadratic model A and b disagree");
  }
  if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw Error(ErrorKind::InvalidArgument, "quadratic model A must be symmetric");
  }
}

double QuadraticModel::operator()(const Vector& theta) const {
  require_dim(theta, dimension());
  return 0.5 * theta.dot(a_ * theta) + b_.dot(theta) + c_;
}

std::vector<std::string> QuadraticModel::parameter_names() const {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < b_.size(); ++i)
    out.push_back("theta_" + std::to_string(i + 1));
  return out;
}

Vector QuadraticModel::minimizer() const { return a_.llt().solve(-b_); }

// --- normal ----------------------------------------------------------------

NormalModel::NormalModel(std::vector<double> data) : data_(std::move(data)) {
  if (data_.empty()) throw Error(ErrorKind::DataError, "normal model needs data");
}

double NormalModel::operator()(const Vector& theta) const {
  require_dim(theta, 2);
  const double mu = theta[0], log_sigma = theta[1];
  double ss = 0.0;
  for (double x : data_) ss += (x - mu) * (x - mu);
  const auto m = static_cast<double>(data_.size());
  return finite_or_throw(0.5 * m * std::log(2.0 * M_PI) + m * log_sigma +
                             0.5 * ss * std::exp(-2.0 * log_sigma),
                         "normal");
}

Matrix NormalModel::analytic_hessian(const Vector& theta) const {
  require_dim(theta, 2);
  const double mu = theta[0];
  const double prec = std::exp(-2.0 * theta[1]);
  double s1 = 0.0, s2 = 0.0;
  for (double x : data_) {
    s1 += x - mu;
    s2 += (x - mu) * (x - mu);
  }
  Matrix h(2, 2);
  h(0, 0) = static_cast<double>(data_.size()) * prec;
  h(0, 1) = h(1, 0) = 2.0 * s1 * prec;
  h(1, 1) = 2.0 * s2 * prec;
  return h;
}

Vector NormalModel::default_start() const {
  const auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
  const double mean =
      std::accumulate(data_.begin(), data_.end(), 0.0) / data_.size();
  Vector s(2);
  s << mean, std::log(std::max(0.5 * (*hi - *lo), 1e-8));
  return s;
}

std::vector<double> synthesize_normal(double mu, double sigma, std::size_t m,
                                      std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> out(m);
  for (auto& x : out) x = mu + sigma * rng.normal();
  return out;
}

// --- proportional odds -------------------------------------------------------

PoProbabilities po_probabilities(double z, double gamma1, double log_gap) {
  const double c1 = z + gamma1;
  const double gap = std::exp(log_gap);
  const double c2 = c1 + gap;
  const double p1 = logistic(c1);
  const double p3 = logistic(-c2);
  // logistic(c2) - logistic(c1) without cancellation
  const double p2 = logistic(c2) * logistic(-c1) * -std::expm1(-gap);
  return {p1, p2, p3};
}

PoModel::PoModel(PoData data) : data_(std::move(data)) {
  if (static_cast<std::size_t>(data_.covariates.rows()) != data_.groups.size()) {
    throw Error(ErrorKind::DataError, "covariate rows and group labels disagree");
  }
  for (int g : data_.groups) {
    if (g < 1 || g > 3) {
      throw Error(ErrorKind::DataError, "group labels must be 1, 2 or 3");
    }
  }
}

double PoModel::operator()(const Vector& theta) const {
  require_dim(theta, dimension());
  const auto p = static_cast<Eigen::Index>(covariate_count());
  const double gamma1 = theta[p];
  const double gap = std::exp(theta[p + 1]);
  // -log(1 - exp(-gap)), shared by every group-2 row
  const double gap_term = -std::log(-std::expm1(-gap));
  const Vector z = data_.covariates * theta.head(p);

  double total = 0.0;
  for (Eigen::Index r = 0; r < z.size(); ++r) {
    const double c1 = z[r] + gamma1;
    const double c2 = c1 + gap;
    switch (data_.groups[static_cast<std::size_t>(r)]) {
      case 1: total += softplus(-c1); break;
      case 2: total += softplus(-c2) + softplus(c1) + gap_term; break;
      default: total += softplus(c2); break;
    }
  }
  return finite_or_throw(total, "po");
}

Matrix PoModel::analytic_hessian(const Vector& theta) const {
  require_dim(theta, dimension());
  const auto p = static_cast<Eigen::Index>(covariate_count());
  const Eigen::Index n = p + 2;
  const double gamma1 = theta[p];
  const double gap = std::exp(theta[p + 1]);

  // c1 = x'beta + gamma1,  c2 = c1 + gap;  d c2 / d log_gap = gap.
  Matrix h = Matrix::Zero(n, n);
  Vector grad_c1 = Vector::Zero(n);
  Vector grad_c2 = Vector::Zero(n);
  double eta_curv = 0.0;  // coefficient on the d^2 c2 / d log_gap^2 = gap term
  std::size_t group2 = 0;

  for (Eigen::Index r = 0; r < data_.covariates.rows(); ++r) {
    grad_c1.head(p) = data_.covariates.row(r).transpose();
    grad_c1[p] = 1.0;
    grad_c2 = grad_c1;
    grad_c2[p + 1] = gap;
    const double c1 = grad_c1.head(p).dot(theta.head(p)) + gamma1;
    const double c2 = c1 + gap;
    const double s1 = logistic(c1), s1m = logistic(-c1);
    const double s2 = logistic(c2), s2m = logistic(-c2);

    switch (data_.groups[static_cast<std::size_t>(r)]) {
      case 1:  // softplus(-c1)
        h.selfadjointView<Eigen::Lower>().rankUpdate(grad_c1, s1 * s1m);
        break;
      case 2:  // softplus(-c2) + softplus(c1) + gap term
        h.selfadjointView<Eigen::Lower>().rankUpdate(grad_c2, s2 * s2m);
        h.selfadjointView<Eigen::Lower>().rankUpdate(grad_c1, s1 * s1m);
        eta_curv += -s2m;
        ++group2;
        break;
      default:  // softplus(c2)
        h.selfadjointView<Eigen::Lower>().rankUpdate(grad_c2, s2 * s2m);
        eta_curv += s2;
        break;
    }
  }
  h = h.selfadjointView<Eigen::Lower>();
  h(p + 1, p + 1) += eta_curv * gap;

  // -log(1 - e^-g) as a function of log g: first derivative in g is
  // -1/expm1(g), second is e^g / expm1(g)^2.
  const double em1 = std::expm1(gap);
  const double dg = -1.0 / em1;
  const double dgg = std::exp(gap) / (em1 * em1);
  h(p + 1, p + 1) += static_cast<double>(group2) * (gap * gap * dgg + gap * dg);
  return h;
}

Vector PoModel::default_start() const { return Vector::Zero(dimension()); }

std::vector<std::string> PoModel::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < covariate_count(); ++i)
    out.push_back("beta_" + std::to_string(i + 1));
  out.push_back("gamma1");
  out.push_back("log_gap");
  return out;
}

Vector po_default_truth() {
  Vector t(kPoCovariates + 2);
  t << 0.9, 0.6, 1.2, -0.6, 0.5, -0.8,   // binary indicators
      0.3, -0.2, 0.4, -0.3, 0.2, 0.5, -0.5,  // continuous
      1.1, std::log(0.96);
  return t;
}

PoData synthesize_po(const Vector& true_theta, std::size_t n, std::uint64_t seed) {
  const auto p = static_cast<Eigen::Index>(true_theta.size()) - 2;
  if (p < 0) throw Error(ErrorKind::InvalidArgument, "PO truth needs >= 2 entries");
  static constexpr double kBinaryRate[] = {0.2, 0.35, 0.5, 0.65, 0.3, 0.15};
  constexpr Eigen::Index kBinary = 6;

  RngStream rng(seed, 0);
  PoData d;
  d.covariates.resize(static_cast<Eigen::Index>(n), p);
  d.groups.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (Eigen::Index j = 0; j < p; ++j) {
      d.covariates(row, j) =
          j < kBinary ? (rng.uniform() < kBinaryRate[j] ? 1.0 : 0.0) : rng.normal();
    }
    const double z = d.covariates.row(row).dot(true_theta.head(p));
    const auto prob = po_probabilities(z, true_theta[p], true_theta[p + 1]);
    const double u = rng.uniform();
    d.groups[r] = u < prob.p1 ? 1 : (u < prob.p1 + prob.p2 ? 2 : 3);
  }
  return d;
}

// --- basketball ------------------------------------------------------------

BasketballModel::BasketballModel(BasketballData data) : data_(std::move(data)) {
  if (data_.n_teams < 2) throw Error(ErrorKind::DataError, "need at least 2 teams");
  for (const auto& g : data_.games) {
    if (g.team1 >= data_.n_teams || g.team2 >= data_.n_teams || g.team1 == g.team2) {
      throw Error(ErrorKind::DataError, "game references an invalid team pair");
    }
  }
}

std::pair<double, double> BasketballModel::mean_scores(const Game& g,
                                                       const Vector& theta) const {
  const auto t = static_cast<Eigen::Index>(data_.n_teams);
  auto log_alpha = [&](std::size_t team) {
    return team == 0 ? 0.0 : theta[static_cast<Eigen::Index>(team) - 1];
  };
  const double a = log_alpha(g.team1) - log_alpha(g.team2);
  const double log_k = theta[t - 1];
  const double log_delta = theta[t];
  return {std::exp((g.home ? log_delta : 0.0) - log_k + a), std::exp(-log_k - a)};
}

double BasketballModel::game_density(const Game& g, const Vector& theta) const {
  const auto t = static_cast<Eigen::Index>(data_.n_teams);
  const double sigma_s = std::exp(theta[t + 1]);
  const double sigma_d = std::exp(theta[t + 2]);
  const auto [t1, t2] = mean_scores(g, theta);
  const double r = g.score1 - g.score2 - (t1 - t2);
  const double u = g.score1 + g.score2 - t1 - t2;
  return std::exp(-0.5 * (r * r / (sigma_d * sigma_d) + u * u / (sigma_s * sigma_s))) /
         (M_PI * sigma_s * sigma_d);
}

double BasketballModel::operator()(const Vector& theta) const {
  require_dim(theta, dimension());
  const auto t = static_cast<Eigen::Index>(data_.n_teams);
  const double log_ss = theta[t + 1], log_sd = theta[t + 2];
  const double prec_s = std::exp(-2.0 * log_ss);
  const double prec_d = std::exp(-2.0 * log_sd);
  double quad = 0.0;
  for (const auto& g : data_.games) {
    const auto [t1, t2] = mean_scores(g, theta);
    const double r = g.score1 - g.score2 - (t1 - t2);
    const double u = g.score1 + g.score2 - t1 - t2;
    quad += r * r * prec_d + u * u * prec_s;
  }
  const auto games = static_cast<double>(data_.games.size());
  return finite_or_throw(
      games * (std::log(M_PI) + log_ss + log_sd) + 0.5 * quad, "basketball");
}

Matrix BasketballModel::analytic_hessian(const Vector& theta) const {
  require_dim(theta, dimension());
  const auto t = static_cast<Eigen::Index>(data_.n_teams);
  const Eigen::Index n = t + 3;
  const Eigen::Index i_k = t - 1, i_delta = t, i_s = t + 1, i_d = t + 2;
  const double prec_s = std::exp(-2.0 * theta[i_s]);
  const double prec_d = std::exp(-2.0 * theta[i_d]);

  Matrix h = Matrix::Zero(n, n);
  // log t1 and log t2 are linear in theta with sparse gradients g1, g2.
  for (const auto& g : data_.games) {
    const auto [t1, t2] = mean_scores(g, theta);
    const double r = g.score1 - g.score2 - (t1 - t2);
    const double u = g.score1 + g.score2 - t1 - t2;

    Vector g1 = Vector::Zero(n), g2 = Vector::Zero(n);
    if (g.team1 > 0) {
      g1[static_cast<Eigen::Index>(g.team1) - 1] += 1.0;
      g2[static_cast<Eigen::Index>(g.team1) - 1] -= 1.0;
    }
    if (g.team2 > 0) {
      g1[static_cast<Eigen::Index>(g.team2) - 1] -= 1.0;
      g2[static_cast<Eigen::Index>(g.team2) - 1] += 1.0;
    }
    g1[i_k] = -1.0;
    g2[i_k] = -1.0;
    if (g.home) g1[i_delta] = 1.0;

    // r' = -t1 g1 + t2 g2,  r'' = -t1 g1 g1' + t2 g2 g2'
    // u' = -t1 g1 - t2 g2,  u'' = -t1 g1 g1' - t2 g2 g2'
    const Vector dr = -t1 * g1 + t2 * g2;
    const Vector du = -t1 * g1 - t2 * g2;
    h.noalias() += prec_d * (dr * dr.transpose()) + prec_s * (du * du.transpose());
    h.noalias() += (prec_d * r * -t1 + prec_s * u * -t1) * (g1 * g1.transpose());
    h.noalias() += (prec_d * r * t2 + prec_s * u * -t2) * (g2 * g2.transpose());

    // sigma terms: 0.5 r^2 e^{-2 log sd} and 0.5 u^2 e^{-2 log ss}
    h.col(i_d).noalias() += -2.0 * prec_d * r * dr;
    h.col(i_s).noalias() += -2.0 * prec_s * u * du;
    h.row(i_d).noalias() += -2.0 * prec_d * r * dr.transpose();
    h.row(i_s).noalias() += -2.0 * prec_s * u * du.transpose();
    h(i_d, i_d) += 2.0 * prec_d * r * r;
    h(i_s, i_s) += 2.0 * prec_s * u * u;
  }
  // The row and column updates round differently; mirror the lower triangle.
  return h.selfadjointView<Eigen::Lower>();
}

Vector BasketballModel::default_start() const {
  double sum = 0.0, sum_sq = 0.0, diff_sq = 0.0;
  for (const auto& g : data_.games) {
    sum += g.score1 + g.score2;
    sum_sq += (g.score1 + g.score2) * (g.score1 + g.score2);
    diff_sq += (g.score1 - g.score2) * (g.score1 - g.score2);
  }
  const double m = std::max<double>(1.0, data_.games.size());
  const double mean_sum = sum / m;
  const double var_sum = std::max(sum_sq / m - mean_sum * mean_sum, 1e-8);
  const auto t = static_cast<Eigen::Index>(data_.n_teams);
  Vector s = Vector::Zero(t + 3);
  s[t - 1] = -std::log(std::max(mean_sum / 2.0, 1e-8));
  s[t + 1] = 0.5 * std::log(var_sum);
  s[t + 2] = 0.5 * std::log(std::max(diff_sq / m, 1e-8));
  return s;
}

std::vector<std::string> BasketballModel::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < data_.n_teams; ++i) {
    const std::string label = i < data_.team_names.size() ? data_.team_names[i]
                                                          : std::to_string(i);
    out.push_back("log_alpha_" + label);
  }
  out.insert(out.end(), {"log_k", "log_delta", "log_sigma_s", "log_sigma_d"});
  return out;
}

Vector basketball_default_truth(std::size_t n_teams, std::uint64_t seed) {
  RngStream rng(seed, 1);
  const auto t = static_cast<Eigen::Index>(n_teams);
  Vector v(t + 3);
  for (Eigen::Index i = 0; i < t - 1; ++i) v[i] = 0.1 * rng.normal();
  v[t - 1] = -std::log(80.0);
  v[t] = std::log(1.04);
  v[t + 1] = std::log(18.0);
  v[t + 2] = std::log(12.0);
  return v;
}

BasketballData synthesize_basketball(const Vector& true_theta,
                                     std::size_t n_teams, std::size_t n_games,
                                     std::uint64_t seed) {
  if (static_cast<std::size_t>(true_theta.size()) != n_teams + 3) {
    throw Error(ErrorKind::DimensionMismatch, "basketball truth has wrong size");
  }
  BasketballData d;
  d.n_teams = n_teams;
  for (std::size_t i = 0; i < n_teams; ++i) d.team_names.push_back("T" + std::to_string(i));
  const BasketballModel shape({n_teams, {}, {}});

  RngStream rng(seed, 0);
  const auto t = static_cast<Eigen::Index>(n_teams);
  const double sigma_s = std::exp(true_theta[t + 1]);
  const double sigma_d = std::exp(true_theta[t + 2]);
  for (std::size_t k = 0; k < n_games; ++k) {
    Game g;
    // Round-robin pairing keeps every team connected to team 0.
    g.team1 = k % n_teams;
    g.team2 = (g.team1 + 1 + static_cast<std::size_t>(rng.uniform() * (n_teams - 1))) % n_teams;
    g.home = rng.uniform() < 0.5;
    const auto [t1, t2] = shape.mean_scores(g, true_theta);
    const double s = t1 + t2 + sigma_s * rng.normal();
    const double dd = t1 - t2 + sigma_d * rng.normal();
    g.score1 = 0.5 * (s + dd);
    g.score2 = 0.5 * (s - dd);
    d.games.push_back(g);
  }
  return d;
}

}  // namespace covkit
