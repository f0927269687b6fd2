#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aerial/rng.hpp"

namespace aerial {

/// Fully enumerable Dec-POMDP: dense transition, observation, and reward
/// tables over integer states, per-agent actions, and per-agent observations.
/// Joint actions and joint observations are mixed-radix indices with agent 0
/// as the most significant digit, which fixes the "lowest joint index"
/// tie-break order used by the solvers.
///
/// The optional initial observation distribution covers models whose agents
/// receive an informative signal at reset. When absent, reset emits a single
/// null observation with probability one, so history probabilities carry a
/// leading factor of exactly 1.
struct TabularModel {
  int num_agents = 0;
  int num_states = 0;
  std::vector<int> num_actions;  // per agent
  std::vector<int> num_obs;      // per agent
  int horizon = 0;
  double discount = 1.0;

  std::vector<double> transition;  // [s][ja][s']
  std::vector<double> obs_prob;    // [ja][s'][jo]
  std::vector<double> reward;      // [s][ja]
  std::vector<double> initial_belief;
  std::vector<std::uint8_t> terminal;               // per state
  std::optional<std::vector<double>> initial_obs;   // dist over joint obs, or null obs

  // Optional display names for the CLI and policy printer.
  std::vector<std::vector<std::string>> action_names;  // per agent
  std::vector<std::vector<std::string>> obs_names;     // per agent
  std::vector<std::string> state_names;

  int num_joint_actions() const;
  int num_joint_obs() const;

  int joint_action_index(const std::vector<int>& per_agent) const;
  std::vector<int> split_joint_action(int ja) const;
  int joint_obs_index(const std::vector<int>& per_agent) const;
  std::vector<int> split_joint_obs(int jo) const;
  int agent_action(int ja, int agent) const;
  int agent_obs(int jo, int agent) const;

  double trans(int s, int ja, int s_next) const {
    return transition[(static_cast<size_t>(s) * num_joint_actions() + ja) * num_states + s_next];
  }
  double obs(int ja, int s_next, int jo) const {
    return obs_prob[(static_cast<size_t>(ja) * num_states + s_next) * num_joint_obs() + jo];
  }
  double rew(int s, int ja) const {
    return reward[static_cast<size_t>(s) * num_joint_actions() + ja];
  }
  bool is_terminal(int s) const { return terminal[s] != 0; }

  /// Checks distribution normalization (1e-12), table sizes, and belief
  /// validity. Throws std::runtime_error on violation.
  void validate() const;

  std::string action_label(int agent, int a) const;
  std::string obs_label(int agent, int z) const;
};

/// Probability vector over states; entries non-negative and summing to one
/// within 1e-12.
struct Belief {
  std::vector<double> probs;

  void validate() const;
  double operator[](int s) const { return probs[s]; }
};

/// Joint history of t steps: the joint action taken at each step and the
/// joint observation received after it. Per-agent local histories are the
/// agent components of these, all aligned by time step and equal length.
struct JointHistory {
  std::vector<int> actions;  // joint action indices
  std::vector<int> obs;      // joint observation indices

  int length() const { return static_cast<int>(actions.size()); }
  void push(int joint_action, int joint_obs) {
    actions.push_back(joint_action);
    obs.push_back(joint_obs);
  }
  bool operator==(const JointHistory& o) const { return actions == o.actions && obs == o.obs; }
};

struct StepOutcome {
  int next_state = 0;
  int joint_obs = 0;
  double reward = 0.0;
};

/// Bayes posterior over states after executing `joint_action` and observing
/// `joint_obs`:  b'(s') proportional to O(z|a,s') * sum_s T(s'|s,a) b(s).
/// Throws std::runtime_error("impossible observation") when the evidence has
/// probability zero, which signals an inconsistent history.
Belief belief_update(const TabularModel& model, const Belief& belief, int joint_action,
                     int joint_obs);

/// Samples one transition. Deterministic given the rng state. Throws
/// std::runtime_error("episode ended") from a terminal state.
StepOutcome step(const TabularModel& model, int state, int joint_action, RngStream& rng);

int sample_initial_state(const TabularModel& model, RngStream& rng);

/// Discounted returns G_t = sum_c gamma^c r_{t+c} for every t.
std::vector<double> discounted_return(const std::vector<double>& rewards, double discount);

}  // namespace aerial
