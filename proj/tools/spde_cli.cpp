// spde: run, validate and list experiment configurations.
//
// Exit codes: 0 all checks pass, 1 a threshold check failed, 2 invalid
// config or arguments, 3 the scheme diverged.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spde/error.hpp"
#include "spde/experiment.hpp"

namespace {

using spde::kExitPass;
using spde::kExitThreshold;
using spde::kExitValidation;

int report_error(const spde::Error& e) {
  std::cerr << "error [" << spde::to_string(e.kind()) << "]: " << e.what() << '\n';
  return spde::exit_code_for(e.kind());
}

void print_checks(const spde::ExperimentResult& r) {
  for (const auto& c : r.checks) {
    std::printf("%s  %-48s value=%.6g  [%.6g, %.6g]  %s\n", c.passed ? "PASS" : "FAIL",
                c.name.c_str(), c.value, c.lower, c.upper, c.detail.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin / exponential Euler experiments for the stochastic heat equation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides config.output)");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "master seed override");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", validate_path, "config JSON")->required();

  std::optional<std::string> write_dir;
  auto* presets = app.add_subcommand("presets", "list the acceptance presets");
  presets->add_option("--write", write_dir, "write each preset config as <name>.json into DIR");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitValidation;
  }

  try {
    if (*presets) {
      for (const auto& p : spde::acceptance_presets()) {
        std::printf("%-24s %s\n", p.name.c_str(), p.description.c_str());
        if (write_dir) {
          std::filesystem::create_directories(*write_dir);
          std::ofstream f(std::filesystem::path(*write_dir) / (p.name + ".json"));
          f << spde::config_to_json(p.config).dump(2) << '\n';
        }
      }
      return kExitPass;
    }

    if (*validate) {
      auto config = spde::load_config(validate_path);
      spde::validate_config(config);
      std::printf("ok: %s\n", spde::to_string(config.experiment));
      return kExitPass;
    }

    auto config = spde::load_config(config_path);
    if (workers) config.workers = *workers;
    if (seed) config.master_seed = *seed;
    if (out_dir) config.output = *out_dir;
    const auto result = spde::run_experiment(config);
    spde::write_result(result, config.output);
    print_checks(result);
    std::printf("%s (%.1f s) -> %s\n", result.passed() ? "passed" : "FAILED", result.wall_seconds,
                config.output.c_str());
    return result.passed() ? kExitPass : kExitThreshold;
  } catch (const spde::Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
