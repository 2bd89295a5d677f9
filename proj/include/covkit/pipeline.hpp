#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "covkit/error.hpp"
#include "covkit/hessian.hpp"
#include "covkit/metrics.hpp"
#include "covkit/models.hpp"
#include "covkit/posterior.hpp"
#include "covkit/spectral.hpp"

namespace covkit {

enum class RunMode { hessian, posterior, benchmark };
enum class ModelKind { po, basketball, normal, quadratic };
/// standard and quick pick the off-diagonal scheme; polish is standard plus
/// eigenvalue polish.
enum class CovMethod { standard, polish, quick };

RunMode parse_mode(std::string_view s);
ModelKind parse_model(std::string_view s);
CovMethod parse_method(std::string_view s);
std::string_view to_string(RunMode m);
std::string_view to_string(ModelKind m);
std::string_view to_string(CovMethod m);

struct SynthSpec {
  std::size_t n = 0;        // rows (po), games (basketball), observations (normal)
  std::uint64_t seed = 1;
  std::size_t teams = 40;   // basketball only
  std::optional<std::vector<double>> true_theta;
};

struct QuadraticSpec {
  Matrix a;
  Vector b;
  double c = 0.0;
};

struct RunConfig {
  RunMode mode = RunMode::hessian;
  ModelKind model = ModelKind::quadratic;
  std::optional<std::filesystem::path> data_path;
  std::optional<SynthSpec> synth;
  std::optional<QuadraticSpec> quadratic;
  std::optional<std::vector<double>> theta_hat;
  CovMethod method = CovMethod::standard;
  int nu0 = 4;
  int batches = 10;
  std::size_t batch_size = 10000;
  WeightConvention convention = WeightConvention::consistent;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::filesystem::path out_dir = ".";

  /// Throws ConfigError if the invariants do not hold.
  void validate() const;
};

/// Parses the JSON config file layout (see README). Unknown keys are errors.
RunConfig config_from_json(const nlohmann::json& j);

/// A loaded model plus how it was obtained.
struct LoadedModel {
  std::unique_ptr<Model> model;
  Vector true_theta;  // empty unless synthesized
  nlohmann::json data_description;
};

LoadedModel load_model(const RunConfig& cfg);

struct HessianRun {
  Vector theta_hat;
  HessianResult hessian;
  CovarianceResult covariance;
  std::optional<ComparisonReport> report;
  Matrix analytic_hessian;
};

/// theta_hat from the config or from fit_mle, then covariance_from_hessian.
HessianRun compute_covariance(const Model& model, const RunConfig& cfg,
                              CovMethod method);

// Each run writes its files into cfg.out_dir and returns the report JSON.
nlohmann::json run_hessian(const RunConfig& cfg);
nlohmann::json run_posterior(const RunConfig& cfg);
nlohmann::json run_benchmark(const RunConfig& cfg);
nlohmann::json run(const RunConfig& cfg);

/// Process exit code for a library error (2 config, 3 data, 5 all weights
/// zero, 4 any other numerical failure).
int exit_code_for(ErrorKind kind);

}  // namespace covkit
