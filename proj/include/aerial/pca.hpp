#pragma once

#include <vector>

#include "aerial/env.hpp"

namespace aerial {

/// Joint observations collected under a uniform-random policy: one flattened
/// row (all agents' observations concatenated) per time step, tagged with
/// its step index.
struct ObservationCloud {
  std::vector<std::vector<double>> rows;
  std::vector<int> step_tags;
  int dim = 0;
};

ObservationCloud collect_joint_observations(const EnvFactory& factory, int episodes, int steps,
                                            RngStream rng);

/// Top two principal components by deflated power iteration on the sample
/// covariance (tolerance 1e-10, at most 10,000 iterations per component).
/// Zero-variance data yields zero projections, zero explained variance.
struct PcaResult {
  std::vector<double> component1, component2;  // unit vectors (zero if degenerate)
  double eigenvalue1 = 0.0, eigenvalue2 = 0.0;
  double explained1 = 0.0, explained2 = 0.0;   // ratios of total variance
  double covariance_trace = 0.0;
  std::vector<double> proj1, proj2;            // per input row
};

PcaResult pca_top2(const std::vector<std::vector<double>>& rows, double tol = 1e-10,
                   int max_iters = 10000);

/// Sum of squared deviations from the mean, per row, divided by (n-1) when
/// summed: per-row dispersion samples whose mean equals the covariance
/// trace. Used for the one-sided dispersion comparisons.
std::vector<double> dispersion_samples(const std::vector<std::vector<double>>& rows);

double covariance_trace(const std::vector<std::vector<double>>& rows);

/// One-sided Welch check at 95%: true iff mean(xs) > mean(ys) with
/// z >= 1.645 under the normal approximation.
bool significantly_greater_95(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace aerial
