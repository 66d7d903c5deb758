// Command-line driver for the channel estimation experiments.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chanest/chanest.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::optional<std::string> algorithms;
};

void attach_common(CLI::App* command, CommonOptions* options, const std::string& default_out) {
  command->add_option("--config", options->config_path, "configuration file path");
  command->add_option("--out", options->out_path, "output CSV path")
      ->default_val(default_out);
  command->add_option("--seed", options->seed, "override base_seed");
  command->add_option("--set", options->overrides, "override key=value (repeatable)");
  command->add_option("--algorithms", options->algorithms,
                      "comma-separated subset of: ls,oracle,omp,cosamp,lasso,msl0");
}

chanest::ExperimentConfig load_config(const CommonOptions& options) {
  std::vector<std::string> overrides = options.overrides;
  if (options.algorithms) overrides.push_back("algorithms=" + *options.algorithms);
  chanest::ExperimentConfig config = chanest::parse_config(options.config_path, overrides);
  if (options.seed) {
    config.base_seed = *options.seed;
    config.validate();
  }
  return config;
}

void print_aggregates(const chanest::SweepResult& result) {
  std::printf("%-8s %4s %8s %8s %14s %14s %9s %12s\n", "alg", "T", "snr_db", "trials",
              "mean_mse", "mse_se", "success", "mean_cpu_s");
  for (const auto& row : result.aggregates) {
    std::printf("%-8s %4d %8.4g %8d %14.6e %14.6e %9.3f %12.3e\n", row.algorithm.c_str(),
                row.sparsity, row.snr_db, row.trials, row.mean_mse,
                row.mse_standard_error, row.success_rate, row.mean_cpu_seconds);
  }
}

int run_sweep_command(const CommonOptions& options,
                      chanest::SweepResult (*sweep)(const chanest::ExperimentConfig&)) {
  const chanest::ExperimentConfig config = load_config(options);
  const chanest::SweepResult result = sweep(config);
  chanest::write_trial_csv(options.out_path, result.records);
  std::printf("experiment: %s, %zu records -> %s\n", result.experiment.c_str(),
              result.records.size(), options.out_path.c_str());
  print_aggregates(result);
  return 0;
}

int run_single(const CommonOptions& options) {
  const chanest::ExperimentConfig config = load_config(options);
  const int sparsity = chanest::designated_sparsity(config);
  const double snr_db = chanest::designated_snr_db(config);
  const auto [problem, seed] = chanest::make_trial_problem(config, sparsity, snr_db, 0);

  std::printf("single run: L = %d, N = %d, T = %d, snr_db = %g, seed = %llu\n",
              config.channel_length, config.training_length, sparsity, snr_db,
              static_cast<unsigned long long>(seed));
  std::printf("%-8s %14s %10s %8s %12s %7s\n", "alg", "mse", "rel_err", "support",
              "cpu_s", "iters");
  for (const std::string& name : config.algorithms) {
    try {
      const chanest::Estimate estimate =
          chanest::run_algorithm(name, problem, config, sparsity);
      const double mse = chanest::squared_error(*problem.truth, estimate);
      const double rel = chanest::relative_error(*problem.truth, estimate);
      const bool hit = chanest::support_recovered(*problem.truth, estimate.taps);
      std::printf("%-8s %14.6e %10.4e %8s %12.3e %7d\n", name.c_str(), mse, rel,
                  hit ? "yes" : "no", estimate.cpu_seconds, estimate.iterations);
    } catch (const std::exception& error) {
      std::printf("%-8s failed: %s\n", name.c_str(), error.what());
    }
  }
  return 0;
}

int run_validate(const CommonOptions& options) {
  const chanest::ExperimentConfig config = load_config(options);
  std::printf("configuration OK\n%s", chanest::describe(config).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compressive channel estimation experiments"};
  app.require_subcommand(1);

  CommonOptions sparsity_options, snr_options, timing_options, single_options,
      validate_options;

  CLI::App* sweep_sparsity_cmd = app.add_subcommand(
      "sweep-sparsity", "mean square error versus channel sparsity");
  attach_common(sweep_sparsity_cmd, &sparsity_options, "sparsity.csv");

  CLI::App* sweep_snr_cmd =
      app.add_subcommand("sweep-snr", "mean square error versus snr");
  attach_common(sweep_snr_cmd, &snr_options, "snr.csv");

  CLI::App* timing_cmd =
      app.add_subcommand("timing", "solver CPU cost versus channel sparsity");
  attach_common(timing_cmd, &timing_options, "timing.csv");

  CLI::App* single_cmd = app.add_subcommand(
      "single-run", "run every configured algorithm on one instance");
  attach_common(single_cmd, &single_options, "");

  CLI::App* validate_cmd =
      app.add_subcommand("validate-config", "parse and validate a configuration");
  attach_common(validate_cmd, &validate_options, "");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep_sparsity_cmd->parsed())
      return run_sweep_command(sparsity_options, &chanest::sweep_sparsity);
    if (sweep_snr_cmd->parsed())
      return run_sweep_command(snr_options, &chanest::sweep_snr);
    if (timing_cmd->parsed())
      return run_sweep_command(timing_options, &chanest::timing_benchmark);
    if (single_cmd->parsed()) return run_single(single_options);
    if (validate_cmd->parsed()) return run_validate(validate_options);
  } catch (const chanest::config_error& error) {
    std::fprintf(stderr, "configuration error: %s\n", error.what());
    return 2;
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 1;
  }
  return 0;
}
