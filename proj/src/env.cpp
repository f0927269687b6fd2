#include "aerial/env.hpp"

#include <stdexcept>

namespace aerial {

std::vector<double> Environment::negated_observation(const std::vector<double>& obs) const {
  std::vector<double> out(obs.size());
  for (size_t i = 0; i < obs.size(); ++i) out[i] = obs[i] == 0.0 ? 0.0 : -obs[i];
  return out;
}

TabularEnv::TabularEnv(TabularModel model) : model_(std::move(model)) {
  model_.validate();
  for (int i = 1; i < model_.num_agents; ++i) {
    if (model_.num_actions[i] != model_.num_actions[0] || model_.num_obs[i] != model_.num_obs[0])
      throw std::invalid_argument("TabularEnv: per-agent action/observation sets must match");
  }
}

int TabularEnv::num_actions() const { return model_.num_actions[0]; }
int TabularEnv::obs_dim() const { return model_.num_obs[0]; }

std::vector<std::vector<double>> TabularEnv::reset(RngStream& rng) {
  state_ = sample_initial_state(model_, rng);
  if (model_.initial_obs) {
    double u = rng.uniform();
    double acc = 0.0;
    int jo = 0;
    for (int z = 0; z < model_.num_joint_obs(); ++z) {
      acc += (*model_.initial_obs)[z];
      if (u < acc) {
        jo = z;
        break;
      }
    }
    return encode_obs(jo);
  }
  // Null initial observation: all-zero vectors.
  return std::vector<std::vector<double>>(model_.num_agents,
                                          std::vector<double>(obs_dim(), 0.0));
}

EnvStep TabularEnv::step(const std::vector<int>& actions, RngStream& rng) {
  const int ja = model_.joint_action_index(actions);
  StepOutcome out = aerial::step(model_, state_, ja, rng);
  state_ = out.next_state;
  EnvStep result;
  result.obs = encode_obs(out.joint_obs);
  result.reward = out.reward;
  result.terminal = model_.is_terminal(state_);
  return result;
}

std::vector<std::vector<double>> TabularEnv::encode_obs(int joint_obs) const {
  std::vector<std::vector<double>> obs(model_.num_agents, std::vector<double>(obs_dim(), 0.0));
  for (int i = 0; i < model_.num_agents; ++i) obs[i][model_.agent_obs(joint_obs, i)] = 1.0;
  return obs;
}

std::vector<double> TabularEnv::state_features_impl() const {
  std::vector<double> f(model_.num_states, 0.0);
  f[state_] = 1.0;
  return f;
}

std::vector<double> TabularEnv::negated_observation(const std::vector<double>& obs) const {
  // Discrete observations travel as one-hot vectors; negation is the
  // symbol-flip channel z -> |Z|-1-z. The null observation stays null.
  std::vector<double> out(obs.size(), 0.0);
  const int z_count = obs_dim();
  for (int z = 0; z < z_count; ++z)
    if (obs[z] != 0.0) out[z_count - 1 - z] = obs[z];
  return out;
}

std::unique_ptr<Environment> TabularEnv::clone() const {
  return std::make_unique<TabularEnv>(*this);
}

}  // namespace aerial
