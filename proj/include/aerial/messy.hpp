#pragma once

#include "aerial/env.hpp"

namespace aerial {

/// Stochasticity knobs: phi corrupts observations, k_init scrambles starts.
struct MessyConfig {
  double phi = 0.0;        // negation probability, in [0, 1)
  int k_init = 0;          // random warm-up steps before the episode starts
  bool per_scalar = false; // negate each scalar independently instead of the whole vector

  void validate() const;
};

/// One Bernoulli draw: with probability phi returns the elementwise-negated
/// vector, otherwise the input unchanged. phi = 0 consumes no randomness.
std::vector<double> messy_observe(const std::vector<double>& obs, double phi, RngStream& rng);

/// Per-scalar variant: each entry negates independently with probability phi.
std::vector<double> messy_observe_per_scalar(const std::vector<double>& obs, double phi,
                                             RngStream& rng);

/// Wrapper implementing both knobs on any environment. Reset performs
/// k_init uniformly random joint actions before handing control over (the
/// horizon counts only post-warm-up steps; a terminal state during warm-up
/// restarts it, and 100 failed warm-ups raise "degenerate warm-up").
/// Emitted observations pass through the base environment's negation
/// channel with probability phi per agent per step.
class MessyEnv : public Environment {
 public:
  MessyEnv(std::unique_ptr<Environment> base, MessyConfig config);
  MessyEnv(const MessyEnv& other);

  int num_agents() const override { return base_->num_agents(); }
  int num_actions() const override { return base_->num_actions(); }
  int obs_dim() const override { return base_->obs_dim(); }
  int state_dim() const override { return base_->state_dim(); }
  int max_steps() const override { return base_->max_steps(); }
  double discount() const override { return base_->discount(); }

  std::vector<std::vector<double>> reset(RngStream& rng) override;
  EnvStep step(const std::vector<int>& actions, RngStream& rng) override;
  bool terminal() const override { return base_->terminal(); }
  bool won() const override { return base_->won(); }
  std::vector<std::uint8_t> action_mask(int agent) const override {
    return base_->action_mask(agent);
  }
  std::vector<double> negated_observation(const std::vector<double>& obs) const override {
    return base_->negated_observation(obs);
  }
  std::unique_ptr<Environment> clone() const override;

  const MessyConfig& config() const { return cfg_; }
  const Environment& base() const { return *base_; }

 protected:
  std::vector<double> state_features_impl() const override { return base_->state_features(); }

 private:
  std::vector<std::vector<double>> corrupt(std::vector<std::vector<double>> obs, RngStream& rng) const;

  std::unique_ptr<Environment> base_;
  MessyConfig cfg_;
};

/// Convenience factory: wraps `base` unless the config is the identity
/// (phi = 0, k_init = 0), in which case behavior is bit-identical anyway.
std::unique_ptr<Environment> messy_wrap(std::unique_ptr<Environment> base, MessyConfig config);

}  // namespace aerial
