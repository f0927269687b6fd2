#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "aerial/decpomdp.hpp"
#include "aerial/rng.hpp"

namespace aerial {

struct EnvStep {
  std::vector<std::vector<double>> obs;  // per agent
  double reward = 0.0;
  bool terminal = false;
};

/// Episode-level environment API shared by the enumerable and generative
/// models. Observations are fixed-width real vectors per agent. Instances
/// are single-owner per episode; the caller enforces the step limit
/// (max_steps), environments only report true terminal states.
///
/// state_features() is the only window onto the true state and counts every
/// call, so tests can verify that state-free training variants never touch
/// it.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int num_agents() const = 0;
  virtual int num_actions() const = 0;
  virtual int obs_dim() const = 0;
  virtual int state_dim() const = 0;
  virtual int max_steps() const = 0;
  virtual double discount() const = 0;

  virtual std::vector<std::vector<double>> reset(RngStream& rng) = 0;
  virtual EnvStep step(const std::vector<int>& actions, RngStream& rng) = 0;
  virtual bool terminal() const = 0;
  virtual bool won() const { return false; }

  /// Per-agent availability mask over actions (1 = selectable).
  virtual std::vector<std::uint8_t> action_mask(int agent) const {
    return std::vector<std::uint8_t>(num_actions(), 1);
  }

  std::vector<double> state_features() const {
    ++state_reads_;
    return state_features_impl();
  }
  long long state_reads() const { return state_reads_; }

  /// Observation corruption used by the messy wrapper: elementwise negation
  /// for vector observations. Discrete-symbol environments override this
  /// with a symbol-flip channel.
  virtual std::vector<double> negated_observation(const std::vector<double>& obs) const;

  virtual std::unique_ptr<Environment> clone() const = 0;

 protected:
  virtual std::vector<double> state_features_impl() const = 0;

 private:
  mutable long long state_reads_ = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

/// Episode adapter for enumerable models: observations become per-agent
/// one-hot vectors, reset emits the null observation (all-zero vector)
/// unless the model declares an initial observation distribution, and state
/// features are the one-hot of the true state.
class TabularEnv : public Environment {
 public:
  explicit TabularEnv(TabularModel model);

  int num_agents() const override { return model_.num_agents; }
  int num_actions() const override;
  int obs_dim() const override;
  int state_dim() const override { return model_.num_states; }
  int max_steps() const override { return model_.horizon; }
  double discount() const override { return model_.discount; }

  std::vector<std::vector<double>> reset(RngStream& rng) override;
  EnvStep step(const std::vector<int>& actions, RngStream& rng) override;
  bool terminal() const override { return model_.is_terminal(state_); }

  std::vector<double> negated_observation(const std::vector<double>& obs) const override;
  std::unique_ptr<Environment> clone() const override;

  const TabularModel& model() const { return model_; }
  int current_state() const { return state_; }

 protected:
  std::vector<double> state_features_impl() const override;

 private:
  std::vector<std::vector<double>> encode_obs(int joint_obs) const;

  TabularModel model_;
  int state_ = 0;
};

}  // namespace aerial
