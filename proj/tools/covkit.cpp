// covkit: covariance matrices for fitted model parameters.
//
//   covkit hessian|posterior|benchmark --config run.json [overrides]

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "covkit/error.hpp"
#include "covkit/io.hpp"
#include "covkit/pipeline.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  nlohmann::json err = {{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << err.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accurate covariance matrices for fitted model parameters"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method, convention, out;
  std::optional<int> nu0, batches;
  std::optional<std::size_t> batch_size;
  std::optional<unsigned> threads;

  for (const char* name : {"hessian", "posterior", "benchmark"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "Sampling seed");
    sub->add_option("--method", method, "standard | polish | quick");
    sub->add_option("--nu0", nu0, "Initial t degrees of freedom");
    sub->add_option("--batches", batches, "Number of sampling batches");
    sub->add_option("--batch-size", batch_size, "Antithetic pairs per batch");
    sub->add_option("--convention", convention, "consistent | paper");
    sub->add_option("--threads", threads, "Worker thread cap");
    sub->add_option("--out", out, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("ConfigError", e.what(), 2);
  }

  try {
    const std::filesystem::path cfg_file(config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(covkit::io::read_text(cfg_file));
    } catch (const nlohmann::json::exception& e) {
      throw covkit::Error(covkit::ErrorKind::ConfigError,
                          "cannot parse " + config_path + ": " + e.what());
    } catch (const covkit::Error& e) {
      throw covkit::Error(covkit::ErrorKind::ConfigError, e.what());
    }
    j["mode"] = app.get_subcommands().front()->get_name();

    auto cfg = covkit::config_from_json(j);
    // Relative data paths are taken from the config file's directory.
    if (cfg.data_path && cfg.data_path->is_relative())
      cfg.data_path = cfg_file.parent_path() / *cfg.data_path;

    if (seed) cfg.seed = *seed;
    if (method) cfg.method = covkit::parse_method(*method);
    if (nu0) cfg.nu0 = *nu0;
    if (batches) cfg.batches = *batches;
    if (batch_size) cfg.batch_size = *batch_size;
    if (convention) cfg.convention = covkit::parse_convention(*convention);
    if (threads) cfg.threads = *threads;
    if (out) cfg.out_dir = *out;
    cfg.validate();

    const auto report = covkit::run(cfg);
    if (report.contains("rejection_rate") && report["rejection_rate"].get<double>() > 0.01) {
      std::cerr << "warning: " << report["rejection_rate"].get<double>() * 100
                << "% of proposal points had a non-finite objective\n";
    }
    std::cout << "wrote results to " << cfg.out_dir.string() << "\n";
    return 0;
  } catch (const covkit::Error& e) {
    return fail(std::string(covkit::to_string(e.kind())), e.what(),
                covkit::exit_code_for(e.kind()));
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("DataError", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), 4);
  }
}
