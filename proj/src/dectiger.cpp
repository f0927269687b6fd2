#include "aerial/dectiger.hpp"

#include <stdexcept>

namespace aerial {

namespace {

constexpr int kListen = 0, kOpenLeft = 1, kOpenRight = 2;
constexpr int kHearLeft = 0, kHearRight = 1;
constexpr int kTigerLeft = 0, kTigerRight = 1;
constexpr double kHearAccuracy = 0.85;

double tiger_reward(int state, int a1, int a2) {
  const int tiger_door = (state == kTigerLeft) ? kOpenLeft : kOpenRight;
  if (a1 == kListen && a2 == kListen) return -2.0;
  if (a1 != kListen && a2 != kListen) {
    if (a1 != a2) return -100.0;
    return (a1 == tiger_door) ? -50.0 : 20.0;
  }
  const int opened = (a1 == kListen) ? a2 : a1;
  return (opened == tiger_door) ? -101.0 : 9.0;
}

}  // namespace

TabularModel dectiger_model(DecTigerVariant variant, int horizon, double discount) {
  if (horizon < 1) throw std::invalid_argument("dectiger_model: horizon must be >= 1");
  TabularModel m;
  m.num_agents = 2;
  const bool terminate = variant == DecTigerVariant::kTerminateOnOpen;
  m.num_states = terminate ? 3 : 2;  // optional absorbing "done" state
  const int done = 2;
  m.num_actions = {3, 3};
  m.num_obs = {2, 2};
  m.horizon = horizon;
  m.discount = discount;
  const int S = m.num_states, JA = m.num_joint_actions(), JO = m.num_joint_obs();
  m.transition.assign(static_cast<size_t>(S) * JA * S, 0.0);
  m.obs_prob.assign(static_cast<size_t>(JA) * S * JO, 0.0);
  m.reward.assign(static_cast<size_t>(S) * JA, 0.0);
  m.initial_belief.assign(S, 0.0);
  m.initial_belief[kTigerLeft] = 0.5;
  m.initial_belief[kTigerRight] = 0.5;
  m.terminal.assign(S, 0);
  if (terminate) m.terminal[done] = 1;

  for (int a1 = 0; a1 < 3; ++a1)
    for (int a2 = 0; a2 < 3; ++a2) {
      const int ja = m.joint_action_index({a1, a2});
      const bool listened = (a1 == kListen && a2 == kListen);
      for (int s = 0; s < S; ++s) {
        if (terminate && s == done) continue;  // absorbing rows filled below
        m.reward[static_cast<size_t>(s) * JA + ja] = tiger_reward(s, a1, a2);
        double* trow = &m.transition[(static_cast<size_t>(s) * JA + ja) * S];
        if (listened) {
          trow[s] = 1.0;  // listening preserves the tiger position
        } else if (terminate) {
          trow[done] = 1.0;
        } else {
          trow[kTigerLeft] = 0.5;
          trow[kTigerRight] = 0.5;
        }
      }
      for (int s2 = 0; s2 < S; ++s2) {
        double* orow = &m.obs_prob[(static_cast<size_t>(ja) * S + s2) * JO];
        if (listened && s2 != done) {
          const int heard = (s2 == kTigerLeft) ? kHearLeft : kHearRight;
          for (int z1 = 0; z1 < 2; ++z1)
            for (int z2 = 0; z2 < 2; ++z2) {
              const double p1 = (z1 == heard) ? kHearAccuracy : 1.0 - kHearAccuracy;
              const double p2 = (z2 == heard) ? kHearAccuracy : 1.0 - kHearAccuracy;
              orow[m.joint_obs_index({z1, z2})] = p1 * p2;
            }
        } else {
          for (int jo = 0; jo < JO; ++jo) orow[jo] = 1.0 / JO;
        }
      }
    }
  if (terminate) {
    // Absorbing state: zero reward, self-loop under every joint action.
    for (int ja = 0; ja < JA; ++ja)
      m.transition[(static_cast<size_t>(done) * JA + ja) * S + done] = 1.0;
  }

  m.action_names = {{"li", "o_L", "o_R"}, {"li", "o_L", "o_R"}};
  m.obs_names = {{"z_L", "z_R"}, {"z_L", "z_R"}};
  m.state_names = terminate ? std::vector<std::string>{"s_L", "s_R", "done"}
                            : std::vector<std::string>{"s_L", "s_R"};
  m.validate();
  return m;
}

DecTigerVariant dectiger_variant_from_string(const std::string& name) {
  if (name == "reset") return DecTigerVariant::kResetOnOpen;
  if (name == "terminate") return DecTigerVariant::kTerminateOnOpen;
  throw std::invalid_argument("unknown dectiger variant: " + name +
                              " (expected 'reset' or 'terminate')");
}

std::string to_string(DecTigerVariant v) {
  return v == DecTigerVariant::kResetOnOpen ? "reset" : "terminate";
}

}  // namespace aerial
