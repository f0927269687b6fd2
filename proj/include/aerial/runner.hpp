#pragma once

#include <string>
#include <vector>

#include "aerial/config.hpp"
#include "aerial/train.hpp"

namespace aerial {

/// Environment factory for the configured env id, variant, and messy knobs.
/// Every returned instance is independent (safe for parallel runs).
EnvFactory build_env_factory(const RunConfig& config);

/// Factory with explicit stochasticity overrides (sweeps, robustness evals).
EnvFactory build_env_factory(const RunConfig& config, double phi, int k_init);

struct SeedRunOutput {
  std::uint64_t seed = 0;
  std::string metrics_path;
  std::string checkpoint_path;
  double final_return = 0.0;
  double final_win_rate = 0.0;
  std::vector<MetricsRow> metrics;
};

struct TrainCommandOutput {
  std::string run_dir;
  std::string manifest_path;
  std::string aggregate_path;
  std::vector<SeedRunOutput> seeds;
};

/// One training run per seed (in a worker pool), a metrics CSV, checkpoint,
/// and wall-clock sidecar per seed, plus the aggregated CSV and the run
/// manifest with the fully resolved configuration.
TrainCommandOutput run_train_command(const RunConfig& config);

struct SolveCommandOutput {
  double value = 0.0;
  std::string policy_text;
};

/// Exact solving via brute force or the best-first search; writes value.txt
/// and policy.txt under the output directory when one is given.
SolveCommandOutput run_solve_command(const RunConfig& config);

struct EvalCommandOutput {
  EvalResult result;
};

EvalCommandOutput run_eval_command(const RunConfig& config);

struct SweepCell {
  std::string algo;
  double phi = 0.0;
  int k_init = 0;
  double win_mean = 0.0;
  double win_ci = 0.0;
  double return_mean = 0.0;
  double normalized_win = 0.0;
  std::vector<double> per_seed_win;
  std::vector<double> per_seed_return;
};

struct SweepCommandOutput {
  std::string sweep_dir;
  std::vector<SweepCell> cells;
  std::vector<std::pair<std::string, int>> best_counts;  // per algo
};

/// Trains every (algo, phi, k, seed) cell in a worker pool, aggregates final
/// evaluation scores, and emits per-cell and normalized summaries plus a
/// best-count tally per algo.
SweepCommandOutput run_sweep_command(const RunConfig& config);

struct DiagPcaOutput {
  std::string projections_path;
  std::string summary_path;
  double covariance_trace = 0.0;
  double explained1 = 0.0;
  double explained2 = 0.0;
};

DiagPcaOutput run_diag_pca(const RunConfig& config);

/// Normalizes each cell's score by the per-environment maximum; at least
/// one cell maps to exactly 1 (all-zero grids stay zero).
std::vector<double> normalize_scores(const std::vector<double>& scores);

void ensure_dir(const std::string& path);

}  // namespace aerial
