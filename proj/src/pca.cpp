#include "aerial/pca.hpp"

#include <cmath>
#include <stdexcept>

#include "aerial/metrics.hpp"

namespace aerial {

ObservationCloud collect_joint_observations(const EnvFactory& factory, int episodes, int steps,
                                            RngStream rng) {
  if (episodes < 2) throw std::invalid_argument("collect_joint_observations: episodes must be >= 2");
  ObservationCloud cloud;
  for (int e = 0; e < episodes; ++e) {
    std::unique_ptr<Environment> env = factory();
    RngStream ep_rng = rng.derive(e);
    RngStream act_rng = ep_rng.derive(1);
    std::vector<std::vector<double>> obs = env->reset(ep_rng);
    const int limit = std::min(steps, env->max_steps());
    for (int t = 0; t < limit; ++t) {
      std::vector<double> row;
      for (const auto& o : obs) row.insert(row.end(), o.begin(), o.end());
      cloud.rows.push_back(std::move(row));
      cloud.step_tags.push_back(t);
      std::vector<int> actions(env->num_agents());
      for (int i = 0; i < env->num_agents(); ++i) {
        const auto mask = env->action_mask(i);
        int avail = 0;
        for (std::uint8_t m : mask) avail += m;
        int pick = act_rng.uniform_int(std::max(avail, 1));
        for (size_t a = 0; a < mask.size(); ++a) {
          if (!mask[a]) continue;
          if (pick-- == 0) {
            actions[i] = static_cast<int>(a);
            break;
          }
        }
      }
      EnvStep out = env->step(actions, ep_rng);
      obs = std::move(out.obs);
      if (out.terminal) break;
    }
  }
  cloud.dim = cloud.rows.empty() ? 0 : static_cast<int>(cloud.rows[0].size());
  return cloud;
}

namespace {

std::vector<double> column_means(const std::vector<std::vector<double>>& rows) {
  const size_t d = rows[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (double& m : mean) m /= static_cast<double>(rows.size());
  return mean;
}

// Dense sample covariance (rows are observations).
std::vector<double> covariance_matrix(const std::vector<std::vector<double>>& rows,
                                      const std::vector<double>& mean) {
  const size_t d = mean.size(), n = rows.size();
  std::vector<double> cov(d * d, 0.0);
  std::vector<double> c(d);
  for (const auto& r : rows) {
    for (size_t j = 0; j < d; ++j) c[j] = r[j] - mean[j];
    for (size_t a = 0; a < d; ++a) {
      if (c[a] == 0.0) continue;
      for (size_t b = 0; b < d; ++b) cov[a * d + b] += c[a] * c[b];
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (double& v : cov) v /= denom;
  return cov;
}

// Leading eigenpair by power iteration; returns eigenvalue (0 if the matrix
// has no positive direction to converge to).
double power_iterate(const std::vector<double>& mat, size_t d, double tol, int max_iters,
                     std::vector<double>* vec) {
  // Deterministic start with energy in every coordinate.
  std::vector<double> v(d);
  RngStream rng(0x9ec0de);
  for (size_t j = 0; j < d; ++j) v[j] = 1.0 + 0.01 * rng.uniform();
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;

  std::vector<double> next(d);
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    for (size_t a = 0; a < d; ++a) {
      double acc = 0.0;
      for (size_t b = 0; b < d; ++b) acc += mat[a * d + b] * v[b];
      next[a] = acc;
    }
    double nn = 0.0;
    for (double x : next) nn += x * x;
    nn = std::sqrt(nn);
    if (nn <= 1e-300) {
      vec->assign(d, 0.0);
      return 0.0;
    }
    for (double& x : next) x /= nn;
    double dot = 0.0;
    for (size_t j = 0; j < d; ++j) dot += next[j] * v[j];
    // Rayleigh quotient under unit norm.
    const double new_lambda = nn * (dot >= 0 ? 1.0 : -1.0);
    v = next;
    if (std::fabs(new_lambda - lambda) <= tol * std::max(1.0, std::fabs(new_lambda)) && it > 0) {
      lambda = new_lambda;
      break;
    }
    lambda = new_lambda;
  }
  *vec = v;
  return lambda;
}

}  // namespace

PcaResult pca_top2(const std::vector<std::vector<double>>& rows, double tol, int max_iters) {
  if (rows.size() < 2) throw std::invalid_argument("pca_top2: need at least 2 rows");
  const size_t d = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != d) throw std::invalid_argument("pca_top2: ragged rows");

  PcaResult res;
  const std::vector<double> mean = column_means(rows);
  std::vector<double> cov = covariance_matrix(rows, mean);
  for (size_t j = 0; j < d; ++j) res.covariance_trace += cov[j * d + j];

  res.component1.assign(d, 0.0);
  res.component2.assign(d, 0.0);
  res.proj1.assign(rows.size(), 0.0);
  res.proj2.assign(rows.size(), 0.0);
  if (res.covariance_trace <= 0.0) return res;  // no dispersion at all

  res.eigenvalue1 = power_iterate(cov, d, tol, max_iters, &res.component1);
  // Deflate and repeat for the second component.
  if (res.eigenvalue1 > 0.0 && d > 1) {
    std::vector<double> deflated = cov;
    for (size_t a = 0; a < d; ++a)
      for (size_t b = 0; b < d; ++b)
        deflated[a * d + b] -= res.eigenvalue1 * res.component1[a] * res.component1[b];
    res.eigenvalue2 = power_iterate(deflated, d, tol, max_iters, &res.component2);
    if (res.eigenvalue2 < 0.0) {
      res.eigenvalue2 = 0.0;
      res.component2.assign(d, 0.0);
    }
  }
  res.explained1 = res.eigenvalue1 / res.covariance_trace;
  res.explained2 = res.eigenvalue2 / res.covariance_trace;
  for (size_t i = 0; i < rows.size(); ++i) {
    double p1 = 0.0, p2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
      const double c = rows[i][j] - mean[j];
      p1 += c * res.component1[j];
      p2 += c * res.component2[j];
    }
    res.proj1[i] = p1;
    res.proj2[i] = p2;
  }
  return res;
}

std::vector<double> dispersion_samples(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("dispersion_samples: need at least 2 rows");
  const std::vector<double> mean = column_means(rows);
  // d_i = n/(n-1) * ||x_i - mean||^2, so that mean(d) equals the trace of
  // the sample covariance.
  const double scale = static_cast<double>(rows.size()) / (rows.size() - 1.0);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    double ss = 0.0;
    for (size_t j = 0; j < mean.size(); ++j) {
      const double c = r[j] - mean[j];
      ss += c * c;
    }
    out.push_back(scale * ss);
  }
  return out;
}

double covariance_trace(const std::vector<std::vector<double>>& rows) {
  return mean_of(dispersion_samples(rows));
}

bool significantly_greater_95(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() < 2 || ys.size() < 2)
    throw std::invalid_argument("significantly_greater_95: need at least 2 samples per side");
  const double mx = mean_of(xs), my = mean_of(ys);
  double vx = 0.0, vy = 0.0;
  for (double x : xs) vx += (x - mx) * (x - mx);
  for (double y : ys) vy += (y - my) * (y - my);
  vx /= (xs.size() - 1.0);
  vy /= (ys.size() - 1.0);
  const double se = std::sqrt(vx / xs.size() + vy / ys.size());
  if (se == 0.0) return mx > my;
  return (mx - my) / se >= 1.645;
}

}  // namespace aerial
