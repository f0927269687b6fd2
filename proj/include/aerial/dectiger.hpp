#pragma once

#include "aerial/decpomdp.hpp"

namespace aerial {

/// Post-open dynamics. reset_on_open re-places the tiger uniformly and the
/// episode continues; terminate_on_open moves to an absorbing zero-reward
/// state. Reward and observation tables are identical across the two.
enum class DecTigerVariant { kResetOnOpen, kTerminateOnOpen };

/// Two-agent tiger benchmark: states {tiger-left, tiger-right}, actions
/// {listen, open-left, open-right} per agent, observations {hear-left,
/// hear-right} per agent. Listening preserves the state and yields a
/// correct observation with probability 0.85 per agent, independently given
/// the state; any door opening makes observations uninformative. Initial
/// belief is uniform with a null initial observation.
TabularModel dectiger_model(DecTigerVariant variant, int horizon, double discount);

DecTigerVariant dectiger_variant_from_string(const std::string& name);
std::string to_string(DecTigerVariant v);

}  // namespace aerial
