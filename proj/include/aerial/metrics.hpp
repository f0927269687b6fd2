#pragma once

#include <string>
#include <vector>

namespace aerial {

/// One evaluation point of a training run. A CSV of these is the primary
/// experiment output; wall-clock timing lives in a separate sidecar file so
/// metrics files are byte-identical across reruns.
struct MetricsRow {
  std::string run_id;
  std::uint64_t seed = 0;
  long long env_step = 0;
  long long episodes = 0;
  double train_loss = 0.0;
  double epsilon = 0.0;
  double eval_return_mean = 0.0;
  double eval_win_rate = 0.0;
  double eval_ci_halfwidth = 0.0;
};

/// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

std::string metrics_header();
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

/// Mean and 95% normal-approximation half-width over aligned evaluation
/// points of several per-seed runs.
struct AggregateRow {
  long long env_step = 0;
  int seeds = 0;
  double return_mean = 0.0;
  double return_ci = 0.0;
  double win_mean = 0.0;
  double win_ci = 0.0;
  double loss_mean = 0.0;
};

std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<MetricsRow>>& runs);
void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows);

double mean_of(const std::vector<double>& xs);
/// 1.96 * standard error; zero for fewer than two samples.
double ci95_halfwidth(const std::vector<double>& xs);

}  // namespace aerial
