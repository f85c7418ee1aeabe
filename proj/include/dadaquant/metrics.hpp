#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dadaquant/config.hpp"
#include "dadaquant/sim.hpp"

namespace dadaquant {

// --- per-round CSV ----------------------------------------------------------
// One row per round; list-valued fields are ';'-joined. Floats are printed
// with enough digits to reparse exactly.

std::string round_log_csv(std::span<const RoundLog> logs);
void write_round_logs(const std::string& path, std::span<const RoundLog> logs);
std::vector<RoundLog> read_round_logs(const std::string& path);

// --- run summaries -----------------------------------------------------------

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<RoundLog> logs;
  std::uint64_t total_bytes = 0;
  double best_accuracy = 0.0;
  double final_accuracy = 0.0;
};

RunResult summarize_run(std::uint64_t seed, std::vector<RoundLog> logs);

struct ExperimentReport {
  std::vector<RunResult> runs;
  double mean_best_accuracy = 0.0;
  double std_best_accuracy = 0.0;
  double mean_final_accuracy = 0.0;
  double mean_total_bytes = 0.0;
  // compression factors; < 0 when the corresponding baseline is absent.
  // Computed from logged bytes only.
  double factor_vs_uncompressed = -1.0;
  double factor_vs_qsgd = -1.0;
};

ExperimentReport aggregate_runs(std::vector<RunResult> runs, double uncompressed_mean_bytes = -1.0,
                                double qsgd_mean_bytes = -1.0);

/// Runs run_training once per seed in the spec and aggregates.
ExperimentReport run_experiment(const RunSpec& spec, const FederatedDataset& ds);

std::string experiment_summary(const ExperimentReport& report, const std::string& label);

// --- communication-accuracy trade-off ----------------------------------------

/// For each evaluation point: (cumulative uplink bytes, best accuracy so
/// far), averaged across seeds at matched evaluation indices. The second
/// coordinate is non-decreasing.
std::vector<std::pair<double, double>> pareto_curve(std::span<const RunResult> runs);

/// Best accuracy reachable within a byte budget on a pareto curve (step
/// interpolation; 0 before the first point).
double curve_accuracy_at(std::span<const std::pair<double, double>> curve, double budget);

// --- static level selection ---------------------------------------------------

struct GridsearchResult {
  std::uint32_t q = 1;
  bool found = false;
  std::vector<std::pair<std::uint32_t, double>> tried;  // (q, mean best accuracy)
};

/// Doubling sweep q = 1, 2, 4, ...: the lowest q whose mean accuracy
/// reaches the uncompressed mean. Falls back to the largest tried level
/// when none qualifies (found = false).
GridsearchResult gridsearch_static_q(const std::function<double(std::uint32_t)>& accuracy_of_q,
                                     double uncompressed_mean, std::uint32_t q_cap = 1u << 16);

}  // namespace dadaquant
