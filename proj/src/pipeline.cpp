#include "covkit/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "covkit/error.hpp"
#include "covkit/io.hpp"
#include "covkit/minimize.hpp"

namespace covkit {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorKind::ConfigError, msg);
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

HessianMethod hessian_method(CovMethod m) {
  return m == CovMethod::quick ? HessianMethod::quick : HessianMethod::standard;
}

}  // namespace

RunMode parse_mode(std::string_view s) {
  if (s == "hessian") return RunMode::hessian;
  if (s == "posterior") return RunMode::posterior;
  if (s == "benchmark") return RunMode::benchmark;
  config_error("unknown mode '" + std::string(s) + "'");
}

ModelKind parse_model(std::string_view s) {
  if (s == "po") return ModelKind::po;
  if (s == "basketball") return ModelKind::basketball;
  if (s == "normal") return ModelKind::normal;
  if (s == "quadratic") return ModelKind::quadratic;
  config_error("unknown model '" + std::string(s) + "'");
}

CovMethod parse_method(std::string_view s) {
  if (s == "standard") return CovMethod::standard;
  if (s == "polish") return CovMethod::polish;
  if (s == "quick") return CovMethod::quick;
  config_error("unknown method '" + std::string(s) + "'");
}

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::hessian: return "hessian";
    case RunMode::posterior: return "posterior";
    case RunMode::benchmark: return "benchmark";
  }
  return "";
}

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::po: return "po";
    case ModelKind::basketball: return "basketball";
    case ModelKind::normal: return "normal";
    case ModelKind::quadratic: return "quadratic";
  }
  return "";
}

std::string_view to_string(CovMethod m) {
  switch (m) {
    case CovMethod::standard: return "standard";
    case CovMethod::polish: return "polish";
    case CovMethod::quick: return "quick";
  }
  return "";
}

void RunConfig::validate() const {
  if (model == ModelKind::quadratic) {
    if (!quadratic) config_error("quadratic model needs a 'quadratic' block");
    if (data_path || synth) config_error("quadratic model takes no data or synth");
    if (quadratic->a.rows() != quadratic->a.cols() ||
        quadratic->a.rows() != quadratic->b.size() || quadratic->b.size() == 0) {
      config_error("quadratic A must be n x n with b of length n");
    }
  } else {
    if (data_path.has_value() == synth.has_value()) {
      config_error("exactly one of 'data' and 'synth' must be given");
    }
    if (quadratic) config_error("'quadratic' block only applies to the quadratic model");
    if (synth && synth->n < 1) config_error("synth.n must be >= 1");
    if (synth && model == ModelKind::basketball && synth->teams < 2) {
      config_error("synth.teams must be >= 2");
    }
  }
  if (nu0 < 3) config_error("nu0 must be >= 3");
  if (batches < 2) config_error("batches must be >= 2");
  if (batch_size < 100) config_error("batch_size must be >= 100");
  if (threads < 1) config_error("threads must be >= 1");
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  reject_unknown(j,
                 {"mode", "model", "data", "synth", "quadratic", "theta_hat",
                  "method", "posterior", "seed", "threads", "out"},
                 "config");
  RunConfig c;
  if (j.contains("mode")) c.mode = parse_mode(get_as<std::string>(j, "mode"));
  if (j.contains("model")) c.model = parse_model(get_as<std::string>(j, "model"));
  if (j.contains("data")) c.data_path = get_as<std::string>(j, "data");
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    reject_unknown(s, {"n", "seed", "teams", "true_theta"}, "synth");
    SynthSpec spec;
    spec.n = get_as<std::size_t>(s, "n");
    if (s.contains("seed")) spec.seed = get_as<std::uint64_t>(s, "seed");
    if (s.contains("teams")) spec.teams = get_as<std::size_t>(s, "teams");
    if (s.contains("true_theta"))
      spec.true_theta = get_as<std::vector<double>>(s, "true_theta");
    c.synth = spec;
  }
  if (j.contains("quadratic")) {
    const auto& q = j.at("quadratic");
    reject_unknown(q, {"A", "b", "c"}, "quadratic");
    const auto rows = get_as<std::vector<std::vector<double>>>(q, "A");
    QuadraticSpec spec;
    spec.a.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) config_error("quadratic.A must be square");
      for (std::size_t k = 0; k < rows.size(); ++k)
        spec.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    const auto b = get_as<std::vector<double>>(q, "b");
    spec.b = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    if (q.contains("c")) spec.c = get_as<double>(q, "c");
    c.quadratic = spec;
  }
  if (j.contains("theta_hat")) c.theta_hat = get_as<std::vector<double>>(j, "theta_hat");
  if (j.contains("method")) c.method = parse_method(get_as<std::string>(j, "method"));
  if (j.contains("posterior")) {
    const auto& p = j.at("posterior");
    reject_unknown(p, {"nu0", "batches", "batch_size", "convention"}, "posterior");
    if (p.contains("nu0")) c.nu0 = get_as<int>(p, "nu0");
    if (p.contains("batches")) c.batches = get_as<int>(p, "batches");
    if (p.contains("batch_size")) c.batch_size = get_as<std::size_t>(p, "batch_size");
    if (p.contains("convention"))
      c.convention = parse_convention(get_as<std::string>(p, "convention"));
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("threads")) c.threads = get_as<unsigned>(j, "threads");
  if (j.contains("out")) c.out_dir = get_as<std::string>(j, "out");
  return c;
}

LoadedModel load_model(const RunConfig& cfg) {
  cfg.validate();
  LoadedModel out;
  json& desc = out.data_description;
  auto truth = [&](Vector fallback) {
    if (cfg.synth->true_theta) {
      const auto& t = *cfg.synth->true_theta;
      Vector v = Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
      if (v.size() != fallback.size()) {
        config_error("synth.true_theta has " + std::to_string(v.size()) +
                     " entries, model needs " + std::to_string(fallback.size()));
      }
      return v;
    }
    return fallback;
  };
  if (cfg.synth) {
    desc = {{"source", "synthetic"}, {"n", cfg.synth->n}, {"seed", cfg.synth->seed}};
  } else if (cfg.data_path) {
    desc = {{"source", "file"}, {"path", cfg.data_path->filename().string()}};
  }

  switch (cfg.model) {
    case ModelKind::quadratic: {
      const auto& q = *cfg.quadratic;
      out.model = std::make_unique<QuadraticModel>(q.a, q.b, q.c);
      desc = {{"source", "config"}};
      break;
    }
    case ModelKind::normal: {
      std::vector<double> data;
      if (cfg.synth) {
        const Vector t = truth((Vector(2) << 0.0, 0.0).finished());
        out.true_theta = t;
        data = synthesize_normal(t[0], std::exp(t[1]), cfg.synth->n, cfg.synth->seed);
      } else {
        data = io::read_normal_csv(*cfg.data_path);
      }
      out.model = std::make_unique<NormalModel>(std::move(data));
      break;
    }
    case ModelKind::po: {
      PoData data;
      if (cfg.synth) {
        out.true_theta = truth(po_default_truth());
        data = synthesize_po(out.true_theta, cfg.synth->n, cfg.synth->seed);
      } else {
        data = io::read_po_csv(*cfg.data_path);
      }
      out.model = std::make_unique<PoModel>(std::move(data));
      break;
    }
    case ModelKind::basketball: {
      BasketballData data;
      if (cfg.synth) {
        const auto teams = cfg.synth->teams;
        out.true_theta = truth(basketball_default_truth(teams, cfg.synth->seed));
        data = synthesize_basketball(out.true_theta, teams, cfg.synth->n, cfg.synth->seed);
        desc["teams"] = teams;
      } else {
        data = io::read_basketball_csv(*cfg.data_path);
      }
      out.model = std::make_unique<BasketballModel>(std::move(data));
      break;
    }
  }
  return out;
}

HessianRun compute_covariance(const Model& model, const RunConfig& cfg,
                              CovMethod method) {
  HessianRun run;
  if (cfg.theta_hat) {
    const auto& t = *cfg.theta_hat;
    run.theta_hat = Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
    if (static_cast<std::size_t>(run.theta_hat.size()) != model.dimension()) {
      config_error("theta_hat has wrong dimension");
    }
  } else {
    run.theta_hat = fit_mle(model, model.default_start()).theta;
  }

  CovarianceOptions opts;
  opts.hessian.method = hessian_method(method);
  opts.hessian.threads = cfg.threads;
  opts.polish = method == CovMethod::polish;
  auto [h, c] = covariance_from_hessian(model, run.theta_hat, opts);
  run.hessian = std::move(h);
  run.covariance = std::move(c);

  run.analytic_hessian = model.analytic_hessian(run.theta_hat);
  const Matrix oracle_cov = run.analytic_hessian.inverse();
  const Matrix computed_h =
      opts.polish ? run.covariance.precision() : run.hessian.matrix;
  ComparisonReport rep;
  rep.method = std::string(to_string(method));
  rep.frobenius_hessian = frobenius_distance(run.analytic_hessian, computed_h);
  rep.frobenius_corr = frobenius_distance(correlation_from_covariance(oracle_cov),
                                          correlation_from_covariance(run.covariance.covariance));
  rep.g_pct = stderr_pct_error(oracle_cov, run.covariance.covariance);
  rep.evaluations = run.hessian.evaluations + run.covariance.polish_evaluations;
  run.report = rep;
  return run;
}

namespace {

json metrics_json(const std::optional<ComparisonReport>& r) {
  if (!r) return nullptr;
  return {{"F", r->frobenius_hessian}, {"corr_F", r->frobenius_corr}, {"G", r->g_pct}};
}

json base_report(const RunConfig& cfg, const LoadedModel& lm) {
  return {{"mode", to_string(cfg.mode)},
          {"model", to_string(cfg.model)},
          {"data", lm.data_description},
          {"parameter_names", lm.model->parameter_names()},
          {"theta_hat", nullptr},
          {"hessian", nullptr},
          {"covariance", nullptr},
          {"theta_tilde", nullptr},
          {"v_tilde", nullptr},
          {"batches", json::array()},
          {"metrics", nullptr},
          {"evaluations", 0},
          {"time_seconds", 0.0}};
}

void write_json(const std::filesystem::path& p, const json& j) {
  io::write_text(p, j.dump(2) + "\n");
}

void write_synth_data(const RunConfig& cfg, const LoadedModel& lm) {
  if (!cfg.synth) return;
  const auto path = cfg.out_dir / "data.csv";
  if (const auto* po = dynamic_cast<const PoModel*>(lm.model.get())) {
    io::write_po_csv(path, po->data());
  } else if (const auto* bb = dynamic_cast<const BasketballModel*>(lm.model.get())) {
    io::write_basketball_csv(path, bb->data());
  } else if (const auto* nm = dynamic_cast<const NormalModel*>(lm.model.get())) {
    io::write_normal_csv(path, nm->data());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json hessian_json(const HessianRun& r) {
  return {{"n", r.theta_hat.size()},
          {"method", to_string(r.hessian.method)},
          {"theta_hat", io::to_json(r.theta_hat)},
          {"f_hat", r.hessian.f_hat},
          {"hessian", io::to_json(r.hessian.matrix)},
          {"steps", io::to_json(r.hessian.steps)},
          {"diag_errors", io::to_json(r.hessian.diag_errors)},
          {"evaluations", r.hessian.evaluations},
          {"diagonal_evaluations", r.hessian.diagonal_evaluations},
          {"offdiag_evaluations", r.hessian.offdiag_evaluations}};
}

json covariance_json(const HessianRun& r) {
  return {{"n", r.theta_hat.size()},
          {"covariance", io::to_json(r.covariance.covariance)},
          {"eigenvalues", io::to_json(r.covariance.eigenvalues)},
          {"eigenvectors", io::to_json(r.covariance.eigenvectors)},
          {"polished", r.covariance.polished},
          {"polish_evaluations", r.covariance.polish_evaluations},
          {"polish_failures", r.covariance.polish_failures},
          {"clamped_indices", r.covariance.clamped_indices}};
}

}  // namespace

json run_hessian(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto lm = load_model(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  write_synth_data(cfg, lm);

  auto r = compute_covariance(*lm.model, cfg, cfg.method);
  write_json(cfg.out_dir / "hessian.json", hessian_json(r));
  write_json(cfg.out_dir / "covariance.json", covariance_json(r));

  json rep = base_report(cfg, lm);
  rep["method"] = to_string(cfg.method);
  rep["theta_hat"] = io::to_json(r.theta_hat);
  rep["hessian"] = io::to_json(r.hessian.matrix);
  rep["covariance"] = io::to_json(r.covariance.covariance);
  rep["metrics"] = metrics_json(r.report);
  rep["evaluations"] = r.report->evaluations;
  rep["clamped_indices"] = r.covariance.clamped_indices;
  rep["time_seconds"] = seconds_since(t0);
  write_json(cfg.out_dir / "report.json", rep);
  return rep;
}

json run_posterior(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto lm = load_model(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  write_synth_data(cfg, lm);

  auto r = compute_covariance(*lm.model, cfg, cfg.method);
  const auto proposal = Proposal::from(r.theta_hat, r.hessian.f_hat,
                                       r.covariance.precision(),
                                       r.covariance.covariance);
  PosteriorOptions popts;
  popts.nu0 = cfg.nu0;
  popts.n_batches = cfg.batches;
  popts.batch_size = cfg.batch_size;
  popts.convention = cfg.convention;
  popts.seed = cfg.seed;
  popts.threads = cfg.threads;
  std::vector<std::string> functional_names;
  if (cfg.model == ModelKind::normal) {
    popts.functionals.push_back([](const Vector& t) { return std::exp(2.0 * t[1]); });
    functional_names.push_back("sigma2");
  }
  const auto post = adaptive_posterior(*lm.model, proposal, popts);

  json batches = json::array();
  for (const auto& b : post.batches) {
    batches.push_back({{"nu", b.nu},
                       {"n_sims", b.n_sims},
                       {"trace", b.trace},
                       {"trace_error", b.trace_error},
                       {"evaluations", b.evaluations},
                       {"rejections", b.rejections},
                       {"delta_mean", io::to_json(b.delta_mean)}});
  }
  json functionals = json::object();
  for (std::size_t g = 0; g < functional_names.size(); ++g) {
    const auto gi = static_cast<Eigen::Index>(g);
    functionals[functional_names[g]] = {{"mean", post.functional_means[gi]},
                                        {"standard_error", post.functional_errors[gi]}};
  }

  json pj = {{"n", r.theta_hat.size()},
             {"convention", to_string(cfg.convention)},
             {"seed", cfg.seed},
             {"theta_hat", io::to_json(r.theta_hat)},
             {"theta_hat_se", io::to_json(r.covariance.covariance.diagonal().cwiseSqrt().eval())},
             {"covariance", io::to_json(r.covariance.covariance)},
             {"theta_tilde", io::to_json(post.theta_tilde)},
             {"theta_tilde_se", io::to_json(post.v_tilde.diagonal().cwiseMax(0.0).cwiseSqrt().eval())},
             {"theta_error", io::to_json(post.theta_error)},
             {"v_tilde", io::to_json(post.v_tilde)},
             {"v_error", io::to_json(post.v_error)},
             {"functionals", functionals},
             {"batches", batches},
             {"evaluations", post.total_evaluations},
             {"hessian_evaluations", r.report->evaluations},
             {"rejections", post.rejections}};
  write_json(cfg.out_dir / "posterior.json", pj);

  json rep = base_report(cfg, lm);
  rep["method"] = to_string(cfg.method);
  rep["theta_hat"] = io::to_json(r.theta_hat);
  rep["hessian"] = io::to_json(r.hessian.matrix);
  rep["covariance"] = io::to_json(r.covariance.covariance);
  rep["theta_tilde"] = io::to_json(post.theta_tilde);
  rep["v_tilde"] = io::to_json(post.v_tilde);
  rep["batches"] = batches;
  rep["metrics"] = metrics_json(r.report);
  rep["evaluations"] = post.total_evaluations;
  rep["rejection_rate"] = post.rejection_rate();
  rep["time_seconds"] = seconds_since(t0);
  write_json(cfg.out_dir / "report.json", rep);
  return rep;
}

json run_benchmark(const RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto lm = load_model(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  write_synth_data(cfg, lm);

  RunConfig fitted = cfg;
  if (!fitted.theta_hat) {
    const Vector t = fit_mle(*lm.model, lm.model->default_start()).theta;
    fitted.theta_hat = std::vector<double>(t.data(), t.data() + t.size());
  }

  std::vector<ComparisonReport> rows;
  for (auto m : {CovMethod::standard, CovMethod::polish, CovMethod::quick}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = compute_covariance(*lm.model, fitted, m);
    r.report->time_seconds = seconds_since(t0);
    rows.push_back(*r.report);
  }
  io::write_report_csv(cfg.out_dir / "benchmark.csv", rows);

  json jrows = json::array();
  for (const auto& r : rows) {
    jrows.push_back({{"method", r.method},
                     {"F", r.frobenius_hessian},
                     {"corr_F", r.frobenius_corr},
                     {"G", r.g_pct},
                     {"evaluations", r.evaluations}});
  }
  json rep = base_report(cfg, lm);
  rep["theta_hat"] = fitted.theta_hat ? json(*fitted.theta_hat) : json(nullptr);
  rep["rows"] = jrows;
  rep["metrics"] = {{"F", rows[0].frobenius_hessian},
                    {"corr_F", rows[0].frobenius_corr},
                    {"G", rows[0].g_pct}};
  std::size_t evals = 0;
  for (const auto& r : rows) evals += r.evaluations;
  rep["evaluations"] = evals;
  rep["time_seconds"] = seconds_since(t_start);
  write_json(cfg.out_dir / "report.json", rep);
  return rep;
}

json run(const RunConfig& cfg) {
  switch (cfg.mode) {
    case RunMode::hessian: return run_hessian(cfg);
    case RunMode::posterior: return run_posterior(cfg);
    case RunMode::benchmark: return run_benchmark(cfg);
  }
  return nullptr;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError: return 2;
    case ErrorKind::DataError: return 3;
    case ErrorKind::AllWeightsZero: return 5;
    default: return 4;
  }
}

}  // namespace covkit
