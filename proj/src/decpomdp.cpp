#include "aerial/decpomdp.hpp"

#include <cmath>
#include <stdexcept>

namespace aerial {

namespace {

int product(const std::vector<int>& xs) {
  int p = 1;
  for (int x : xs) p *= x;
  return p;
}

int pack(const std::vector<int>& digits, const std::vector<int>& radix) {
  int idx = 0;
  for (size_t i = 0; i < radix.size(); ++i) idx = idx * radix[i] + digits[i];
  return idx;
}

std::vector<int> unpack(int idx, const std::vector<int>& radix) {
  std::vector<int> digits(radix.size());
  for (size_t i = radix.size(); i-- > 0;) {
    digits[i] = idx % radix[i];
    idx /= radix[i];
  }
  return digits;
}

int digit(int idx, int agent, const std::vector<int>& radix) {
  for (size_t i = radix.size(); i-- > static_cast<size_t>(agent) + 1;) idx /= radix[i];
  return idx % radix[agent];
}

constexpr double kDistTol = 1e-12;

}  // namespace

int TabularModel::num_joint_actions() const { return product(num_actions); }
int TabularModel::num_joint_obs() const { return product(num_obs); }

int TabularModel::joint_action_index(const std::vector<int>& per_agent) const {
  return pack(per_agent, num_actions);
}
std::vector<int> TabularModel::split_joint_action(int ja) const { return unpack(ja, num_actions); }
int TabularModel::joint_obs_index(const std::vector<int>& per_agent) const {
  return pack(per_agent, num_obs);
}
std::vector<int> TabularModel::split_joint_obs(int jo) const { return unpack(jo, num_obs); }
int TabularModel::agent_action(int ja, int agent) const { return digit(ja, agent, num_actions); }
int TabularModel::agent_obs(int jo, int agent) const { return digit(jo, agent, num_obs); }

void TabularModel::validate() const {
  if (num_agents <= 0 || num_states <= 0) throw std::runtime_error("model: empty state/agent set");
  if (static_cast<int>(num_actions.size()) != num_agents ||
      static_cast<int>(num_obs.size()) != num_agents)
    throw std::runtime_error("model: per-agent set count mismatch");
  const size_t ja_n = num_joint_actions(), jo_n = num_joint_obs(), s_n = num_states;
  if (transition.size() != s_n * ja_n * s_n) throw std::runtime_error("model: transition table size");
  if (obs_prob.size() != ja_n * s_n * jo_n) throw std::runtime_error("model: observation table size");
  if (reward.size() != s_n * ja_n) throw std::runtime_error("model: reward table size");
  if (initial_belief.size() != s_n) throw std::runtime_error("model: initial belief size");
  if (terminal.size() != s_n) throw std::runtime_error("model: terminal flag size");
  for (size_t s = 0; s < s_n; ++s)
    for (size_t a = 0; a < ja_n; ++a) {
      double sum = 0.0;
      for (size_t s2 = 0; s2 < s_n; ++s2) {
        const double p = transition[(s * ja_n + a) * s_n + s2];
        if (p < 0.0) throw std::runtime_error("model: negative transition probability");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > kDistTol)
        throw std::runtime_error("model: transition row does not sum to 1");
    }
  for (size_t a = 0; a < ja_n; ++a)
    for (size_t s2 = 0; s2 < s_n; ++s2) {
      double sum = 0.0;
      for (size_t z = 0; z < jo_n; ++z) {
        const double p = obs_prob[(a * s_n + s2) * jo_n + z];
        if (p < 0.0) throw std::runtime_error("model: negative observation probability");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > kDistTol)
        throw std::runtime_error("model: observation row does not sum to 1");
    }
  double bsum = 0.0;
  for (double p : initial_belief) {
    if (p < 0.0) throw std::runtime_error("model: negative initial belief entry");
    bsum += p;
  }
  if (std::fabs(bsum - 1.0) > kDistTol)
    throw std::runtime_error("model: initial belief does not sum to 1");
  if (initial_obs) {
    double osum = 0.0;
    for (double p : *initial_obs) osum += p;
    if (initial_obs->size() != jo_n || std::fabs(osum - 1.0) > kDistTol)
      throw std::runtime_error("model: initial observation distribution invalid");
  }
  if (horizon < 1) throw std::runtime_error("model: horizon must be >= 1");
  if (discount < 0.0 || discount > 1.0) throw std::runtime_error("model: discount out of [0,1]");
}

std::string TabularModel::action_label(int agent, int a) const {
  if (agent < static_cast<int>(action_names.size()) &&
      a < static_cast<int>(action_names[agent].size()))
    return action_names[agent][a];
  return "a" + std::to_string(a);
}

std::string TabularModel::obs_label(int agent, int z) const {
  if (agent < static_cast<int>(obs_names.size()) && z < static_cast<int>(obs_names[agent].size()))
    return obs_names[agent][z];
  return "z" + std::to_string(z);
}

void Belief::validate() const {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::runtime_error("belief: negative entry");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > kDistTol) throw std::runtime_error("belief: does not sum to 1");
}

Belief belief_update(const TabularModel& model, const Belief& belief, int joint_action,
                     int joint_obs) {
  const int S = model.num_states;
  Belief out;
  out.probs.assign(S, 0.0);
  double evidence = 0.0;
  for (int s2 = 0; s2 < S; ++s2) {
    double mass = 0.0;
    for (int s = 0; s < S; ++s) mass += model.trans(s, joint_action, s2) * belief.probs[s];
    const double p = model.obs(joint_action, s2, joint_obs) * mass;
    out.probs[s2] = p;
    evidence += p;
  }
  if (evidence <= 0.0) throw std::runtime_error("impossible observation");
  for (double& p : out.probs) p /= evidence;
  return out;
}

namespace {

int sample_index(const double* probs, int n, double u) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Guard against accumulated rounding on the last positive entry.
  for (int i = n; i-- > 0;)
    if (probs[i] > 0.0) return i;
  return 0;
}

}  // namespace

StepOutcome step(const TabularModel& model, int state, int joint_action, RngStream& rng) {
  if (model.is_terminal(state)) throw std::runtime_error("episode ended");
  const int S = model.num_states;
  StepOutcome out;
  out.reward = model.rew(state, joint_action);
  const size_t trow = (static_cast<size_t>(state) * model.num_joint_actions() + joint_action) * S;
  out.next_state = sample_index(model.transition.data() + trow, S, rng.uniform());
  const size_t orow = (static_cast<size_t>(joint_action) * S + out.next_state) *
                      model.num_joint_obs();
  out.joint_obs = sample_index(model.obs_prob.data() + orow, model.num_joint_obs(), rng.uniform());
  return out;
}

int sample_initial_state(const TabularModel& model, RngStream& rng) {
  return sample_index(model.initial_belief.data(), model.num_states, rng.uniform());
}

std::vector<double> discounted_return(const std::vector<double>& rewards, double discount) {
  if (discount < 0.0 || discount > 1.0)
    throw std::invalid_argument("discounted_return: discount out of [0,1]");
  std::vector<double> g(rewards.size(), 0.0);
  double acc = 0.0;
  for (size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + discount * acc;
    g[i] = acc;
  }
  return g;
}

}  // namespace aerial
