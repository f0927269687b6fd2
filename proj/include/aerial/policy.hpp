#pragma once

#include <string>
#include <vector>

#include "aerial/decpomdp.hpp"

namespace aerial {

struct PolicyNode {
  int action = 0;
  std::vector<PolicyNode> children;  // one per local observation, empty at the last step
};

/// Deterministic joint policy as one decision tree per agent: a root action,
/// then one subtree per local observation, to depth `depth`.
struct PolicyTree {
  int depth = 0;
  std::vector<PolicyNode> agents;

  /// Action prescribed to `agent` after seeing the local observation
  /// sequence `obs_seq` (length < depth).
  int local_action(int agent, const std::vector<int>& obs_seq) const;

  /// Joint action index prescribed after the joint history.
  int joint_action(const TabularModel& model, const JointHistory& history) const;

  /// Every internal node must have exactly |Z_i| children.
  void validate(const TabularModel& model) const;

  /// Tree with the same fixed action everywhere (e.g. always-listen).
  static PolicyTree uniform(const TabularModel& model, int depth,
                            const std::vector<int>& action_per_agent);

  std::string to_text(const TabularModel& model) const;
};

}  // namespace aerial
