#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "chanest/baselines.hpp"
#include "chanest/channel_model.hpp"
#include "chanest/cpu_clock.hpp"
#include "chanest/errors.hpp"
#include "chanest/rng.hpp"
#include "chanest/smoothed_l0.hpp"
#include "chanest/types.hpp"

namespace chanest {

struct ExperimentConfig {
  int channel_length = 60;
  int training_length = 40;
  std::vector<int> sparsity_values = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  std::vector<double> snr_values_db = {0, 5, 10, 15, 20, 25, 30};
  int trials = 1000;
  std::uint64_t base_seed = 12345;
  std::vector<std::string> algorithms = {"ls", "oracle", "omp", "cosamp", "lasso", "msl0"};
  double tap_std = 0.70710678118654752;  // unit expected squared tap magnitude

  Msl0Params msl0{};
  LassoParams lasso{};
  GreedyParams greedy{};  ///< target_sparsity is replaced by the cell sparsity

  void validate() const;
};

/// Registered solver labels, in canonical order.
inline const std::vector<std::string>& algorithm_registry() {
  static const std::vector<std::string> names = {"ls", "oracle", "omp",
                                                 "cosamp", "lasso", "msl0"};
  return names;
}

inline void ExperimentConfig::validate() const {
  if (channel_length < 1)
    throw config_error("channel_length must be >= 1", "channel_length");
  if (training_length < 1)
    throw config_error("training_length must be >= 1", "training_length");
  if (sparsity_values.empty())
    throw config_error("sparsity_values must not be empty", "sparsity_values");
  for (int value : sparsity_values) {
    if (value < 1 || value > channel_length)
      throw config_error("sparsity_values entries must lie in [1, channel_length]",
                         "sparsity_values");
  }
  if (snr_values_db.empty())
    throw config_error("snr_values_db must not be empty", "snr_values_db");
  for (double value : snr_values_db) {
    if (std::isnan(value) || (std::isinf(value) && value < 0.0))
      throw config_error("snr_values_db entries must be finite or inf", "snr_values_db");
  }
  if (trials < 1) throw config_error("trials must be >= 1", "trials");
  if (algorithms.empty())
    throw config_error("algorithms must not be empty", "algorithms");
  const auto& registry = algorithm_registry();
  for (const auto& name : algorithms) {
    if (std::find(registry.begin(), registry.end(), name) == registry.end())
      throw config_error("unknown algorithm '" + name + "'", "algorithms");
  }
  if (!(tap_std > 0.0)) throw config_error("tap_std must be positive", "tap_std");
  try {
    msl0.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what(), "msl0");
  }
  try {
    lasso.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what(), "lasso");
  }
  try {
    greedy.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what(), "greedy");
  }
}

/// One (algorithm, cell, trial) outcome. `seed` is the trial seed shared by
/// every algorithm run on the same cell and trial index.
struct TrialRecord {
  std::string experiment;
  std::string algorithm;
  int channel_length = 0;
  int training_length = 0;
  int sparsity = 0;
  double snr_db = 0.0;
  int trial_index = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  bool support_recovered = false;
  double cpu_seconds = 0.0;
  bool failed = false;
};

struct AggregateRow {
  std::string algorithm;
  int sparsity = 0;
  double snr_db = 0.0;
  int trials = 0;
  double mean_mse = 0.0;
  double mse_standard_error = 0.0;
  double mean_cpu_seconds = 0.0;
  double success_rate = 0.0;
};

struct SweepResult {
  ExperimentConfig config;
  std::string experiment;
  std::vector<TrialRecord> records;
  std::vector<AggregateRow> aggregates;
};

inline double squared_error(const SparseChannel& truth, const Estimate& estimate) {
  if (truth.taps.size() != estimate.taps.size())
    throw std::invalid_argument("squared_error: estimate length must match the channel");
  return (truth.taps - estimate.taps).squaredNorm();
}

inline double relative_error(const SparseChannel& truth, const Estimate& estimate) {
  const double truth_norm = truth.taps.norm();
  if (truth_norm == 0.0)
    throw std::invalid_argument("relative_error: zero reference channel");
  return std::sqrt(squared_error(truth, estimate)) / truth_norm;
}

/// True when the sparsity() largest-magnitude estimated taps sit exactly on
/// the true support.
inline bool support_recovered(const SparseChannel& truth, const CVector& estimated_taps) {
  if (truth.taps.size() != estimated_taps.size())
    throw std::invalid_argument("support_recovered: estimate length must match the channel");
  const std::vector<int> top =
      detail::top_magnitude_indices(estimated_taps, truth.sparsity());
  return top == truth.support;
}

/// Deterministic per-trial seed: a fixed-order fold of the cell coordinates
/// and trial index into the base seed. Algorithm-independent, so paired runs
/// see identical problems.
inline std::uint64_t trial_seed(std::uint64_t base_seed, int sparsity, double snr_db,
                                int trial_index) {
  std::uint64_t seed = seed_combine(base_seed, std::bit_cast<std::uint64_t>(snr_db));
  seed = seed_combine(seed, static_cast<std::uint64_t>(sparsity));
  return seed_combine(seed, static_cast<std::uint64_t>(trial_index));
}

/// Generates the full problem instance for one cell and trial. Channel,
/// training matrix, and noise use distinct sub-seeds of the trial seed.
inline std::pair<EstimationProblem, std::uint64_t> make_trial_problem(
    const ExperimentConfig& config, int sparsity, double snr_db, int trial_index) {
  if (sparsity < 0 || sparsity > config.channel_length)
    throw std::invalid_argument("make_trial_problem: sparsity must lie in [0, channel_length]");
  if (trial_index < 0)
    throw std::invalid_argument("make_trial_problem: trial_index must be >= 0");
  const std::uint64_t seed = trial_seed(config.base_seed, sparsity, snr_db, trial_index);
  const SparseChannel channel = generate_channel(config.channel_length, sparsity,
                                                 config.tap_std, seed_combine(seed, 1));
  const TrainingMatrix matrix =
      generate_training(config.training_length, config.channel_length, seed_combine(seed, 2));
  EstimationProblem problem =
      synthesize_measurement(matrix, channel, snr_db, seed_combine(seed, 3));
  return {std::move(problem), seed};
}

/// Dispatches one registered solver on the problem. `target_sparsity` feeds
/// the greedy solvers; the others ignore it.
inline Estimate run_algorithm(const std::string& name, const EstimationProblem& problem,
                              const ExperimentConfig& config, int target_sparsity) {
  if (name == "ls") return ls_min_norm(problem);
  if (name == "oracle") {
    if (!problem.truth)
      throw std::invalid_argument("run_algorithm: oracle requires ground truth");
    return oracle_estimate(problem, problem.truth->support);
  }
  if (name == "omp" || name == "cosamp") {
    GreedyParams greedy = config.greedy;
    greedy.target_sparsity = target_sparsity;
    return name == "omp" ? omp_solve(problem, greedy) : cosamp_solve(problem, greedy);
  }
  if (name == "lasso") return lasso_solve(problem, config.lasso);
  if (name == "msl0") return msl0_solve(problem, config.msl0);
  throw std::invalid_argument("run_algorithm: unknown algorithm '" + name + "'");
}

namespace detail {

/// Runs one solver on a prepared problem and captures the outcome. Solver
/// exceptions become failed records carrying the zero-estimate error |h|^2,
/// so a sweep never aborts mid-way.
inline TrialRecord evaluate_trial(const EstimationProblem& problem, std::uint64_t seed,
                                  const ExperimentConfig& config, const std::string& experiment,
                                  int sparsity, double snr_db, const std::string& algorithm,
                                  int trial_index) {
  TrialRecord record;
  record.experiment = experiment;
  record.algorithm = algorithm;
  record.channel_length = config.channel_length;
  record.training_length = config.training_length;
  record.sparsity = sparsity;
  record.snr_db = snr_db;
  record.trial_index = trial_index;
  record.seed = seed;

  const double began = thread_cpu_seconds();
  try {
    const Estimate estimate = run_algorithm(algorithm, problem, config, sparsity);
    record.mse = squared_error(*problem.truth, estimate);
    record.support_recovered = support_recovered(*problem.truth, estimate.taps);
    record.cpu_seconds = estimate.cpu_seconds;
  } catch (const std::exception&) {
    record.failed = true;
    record.mse = problem.truth ? problem.truth->taps.squaredNorm() : 0.0;
    record.support_recovered = false;
    record.cpu_seconds = thread_cpu_seconds() - began;
  }
  return record;
}

}  // namespace detail

/// Regenerates the trial problem from config and coordinates, runs one
/// algorithm, and returns its record. Pure in (config, coordinates) apart
/// from cpu_seconds.
inline TrialRecord run_trial(const ExperimentConfig& config, int sparsity, double snr_db,
                             const std::string& algorithm, int trial_index,
                             const std::string& experiment = "single") {
  auto [problem, seed] = make_trial_problem(config, sparsity, snr_db, trial_index);
  return detail::evaluate_trial(problem, seed, config, experiment, sparsity, snr_db,
                                algorithm, trial_index);
}

/// Canonical record order: (algorithm, sparsity, snr_db, trial_index).
inline void sort_records(std::vector<TrialRecord>& records) {
  std::sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return std::tie(a.algorithm, a.sparsity, a.snr_db, a.trial_index) <
           std::tie(b.algorithm, b.sparsity, b.snr_db, b.trial_index);
  });
}

/// Per-cell means over a record set. A pure function of the records: the
/// input is re-sorted canonically before grouping, so any ordering of the
/// same records produces identical aggregates.
inline std::vector<AggregateRow> aggregate_records(std::vector<TrialRecord> records) {
  sort_records(records);
  std::vector<AggregateRow> rows;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    double mse_sum = 0.0, mse_sq_sum = 0.0, cpu_sum = 0.0;
    int successes = 0;
    while (j < records.size() && records[j].algorithm == records[i].algorithm &&
           records[j].sparsity == records[i].sparsity &&
           records[j].snr_db == records[i].snr_db) {
      mse_sum += records[j].mse;
      mse_sq_sum += records[j].mse * records[j].mse;
      cpu_sum += records[j].cpu_seconds;
      successes += records[j].support_recovered ? 1 : 0;
      ++j;
    }
    const double count = static_cast<double>(j - i);
    AggregateRow row;
    row.algorithm = records[i].algorithm;
    row.sparsity = records[i].sparsity;
    row.snr_db = records[i].snr_db;
    row.trials = static_cast<int>(j - i);
    row.mean_mse = mse_sum / count;
    const double variance =
        count > 1.0 ? std::max(0.0, (mse_sq_sum - count * row.mean_mse * row.mean_mse) /
                                        (count - 1.0))
                    : 0.0;
    row.mse_standard_error = std::sqrt(variance / count);
    row.mean_cpu_seconds = cpu_sum / count;
    row.success_rate = static_cast<double>(successes) / count;
    rows.push_back(std::move(row));
    i = j;
  }
  return rows;
}

/// The snr held fixed by sweeps that vary sparsity: the sole configured snr
/// value when there is exactly one, otherwise 10 dB.
inline double designated_snr_db(const ExperimentConfig& config) {
  return config.snr_values_db.size() == 1 ? config.snr_values_db.front() : 10.0;
}

/// The sparsity held fixed by sweeps that vary snr: the sole configured
/// sparsity value when there is exactly one, otherwise 4.
inline int designated_sparsity(const ExperimentConfig& config) {
  return config.sparsity_values.size() == 1 ? config.sparsity_values.front() : 4;
}

namespace detail {

inline SweepResult run_sweep(const ExperimentConfig& config, std::string experiment,
                             const std::vector<std::pair<int, double>>& cells) {
  config.validate();
  std::vector<TrialRecord> records;
  records.reserve(cells.size() * static_cast<std::size_t>(config.trials) *
                  config.algorithms.size());
  for (const auto& [sparsity, snr_db] : cells) {
    for (int trial = 0; trial < config.trials; ++trial) {
      // One problem per (cell, trial): every algorithm sees the same instance.
      const auto [problem, seed] = make_trial_problem(config, sparsity, snr_db, trial);
      for (const auto& algorithm : config.algorithms) {
        records.push_back(evaluate_trial(problem, seed, config, experiment, sparsity,
                                         snr_db, algorithm, trial));
      }
    }
  }
  sort_records(records);
  std::vector<AggregateRow> aggregates = aggregate_records(records);
  return SweepResult{config, std::move(experiment), std::move(records),
                     std::move(aggregates)};
}

}  // namespace detail

/// Error-versus-sparsity experiment: every configured sparsity at the
/// designated snr.
inline SweepResult sweep_sparsity(const ExperimentConfig& config) {
  std::vector<std::pair<int, double>> cells;
  const double snr_db = designated_snr_db(config);
  for (int sparsity : config.sparsity_values) cells.emplace_back(sparsity, snr_db);
  return detail::run_sweep(config, "sparsity", cells);
}

/// Error-versus-snr experiment: every configured snr at the designated
/// sparsity.
inline SweepResult sweep_snr(const ExperimentConfig& config) {
  std::vector<std::pair<int, double>> cells;
  const int sparsity = designated_sparsity(config);
  for (double snr_db : config.snr_values_db) cells.emplace_back(sparsity, snr_db);
  return detail::run_sweep(config, "snr", cells);
}

/// CPU-cost experiment: every configured sparsity at the designated snr,
/// reported through the per-record solver timings.
inline SweepResult timing_benchmark(const ExperimentConfig& config) {
  std::vector<std::pair<int, double>> cells;
  const double snr_db = designated_snr_db(config);
  for (int sparsity : config.sparsity_values) cells.emplace_back(sparsity, snr_db);
  return detail::run_sweep(config, "timing", cells);
}

}  // namespace chanest
