#include "aerial/messy.hpp"

#include <stdexcept>

namespace aerial {

void MessyConfig::validate() const {
  if (phi < 0.0 || phi >= 1.0) throw std::invalid_argument("messy: phi must be in [0, 1)");
  if (k_init < 0) throw std::invalid_argument("messy: k_init must be >= 0");
}

namespace {

std::vector<double> negate_plain(const std::vector<double>& obs) {
  std::vector<double> out(obs.size());
  for (size_t i = 0; i < obs.size(); ++i) out[i] = obs[i] == 0.0 ? 0.0 : -obs[i];
  return out;
}

}  // namespace

std::vector<double> messy_observe(const std::vector<double>& obs, double phi, RngStream& rng) {
  if (phi < 0.0 || phi >= 1.0) throw std::invalid_argument("messy_observe: phi must be in [0, 1)");
  if (phi == 0.0) return obs;
  if (rng.uniform() < phi) return negate_plain(obs);
  return obs;
}

std::vector<double> messy_observe_per_scalar(const std::vector<double>& obs, double phi,
                                             RngStream& rng) {
  if (phi < 0.0 || phi >= 1.0)
    throw std::invalid_argument("messy_observe_per_scalar: phi must be in [0, 1)");
  if (phi == 0.0) return obs;
  std::vector<double> out(obs.size());
  for (size_t i = 0; i < obs.size(); ++i) {
    const bool flip = rng.uniform() < phi;
    out[i] = flip ? (obs[i] == 0.0 ? 0.0 : -obs[i]) : obs[i];
  }
  return out;
}

MessyEnv::MessyEnv(std::unique_ptr<Environment> base, MessyConfig config)
    : base_(std::move(base)), cfg_(config) {
  cfg_.validate();
}

MessyEnv::MessyEnv(const MessyEnv& other) : base_(other.base_->clone()), cfg_(other.cfg_) {}

std::vector<std::vector<double>> MessyEnv::corrupt(std::vector<std::vector<double>> obs,
                                                   RngStream& rng) const {
  if (cfg_.phi == 0.0) return obs;
  for (auto& o : obs) {
    if (cfg_.per_scalar) {
      for (double& v : o)
        if (rng.uniform() < cfg_.phi) v = (v == 0.0 ? 0.0 : -v);
    } else if (rng.uniform() < cfg_.phi) {
      o = base_->negated_observation(o);
    }
  }
  return obs;
}

std::vector<std::vector<double>> MessyEnv::reset(RngStream& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<std::vector<double>> obs = base_->reset(rng);
    bool dead_end = false;
    for (int k = 0; k < cfg_.k_init; ++k) {
      std::vector<int> actions(base_->num_agents());
      for (int i = 0; i < base_->num_agents(); ++i)
        actions[i] = rng.uniform_int(base_->num_actions());
      EnvStep out = base_->step(actions, rng);
      obs = std::move(out.obs);
      if (out.terminal) {
        dead_end = true;
        break;
      }
    }
    if (!dead_end) return corrupt(std::move(obs), rng);
  }
  throw std::runtime_error("degenerate warm-up");
}

EnvStep MessyEnv::step(const std::vector<int>& actions, RngStream& rng) {
  EnvStep out = base_->step(actions, rng);
  out.obs = corrupt(std::move(out.obs), rng);
  return out;
}

std::unique_ptr<Environment> MessyEnv::clone() const { return std::make_unique<MessyEnv>(*this); }

std::unique_ptr<Environment> messy_wrap(std::unique_ptr<Environment> base, MessyConfig config) {
  return std::make_unique<MessyEnv>(std::move(base), config);
}

}  // namespace aerial
