#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "aerial/decpomdp.hpp"
#include "aerial/policy.hpp"

namespace aerial {

/// Raised when an exact method would exceed its enumeration or node budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
  double best_incumbent = 0.0;
  bool has_incumbent = false;
};

/// Finite-horizon optimal values of the fully observable relaxation,
/// Q(s, a, k) = R(s,a) + gamma * sum_s' T(s'|s,a) max_a' Q(s', a', k-1),
/// tabulated for k = 1..horizon. Upper-bounds the partially observable
/// optimum, which is what makes it usable as the search heuristic.
class MdpValueTable {
 public:
  MdpValueTable(const TabularModel& model, int horizon);

  double q(int state, int joint_action, int steps_remaining) const;
  double v(int state, int steps_remaining) const;
  int greedy_action(int state, int steps_remaining) const;  // ties: lowest index
  int horizon() const { return horizon_; }

 private:
  int horizon_, num_states_, num_actions_;
  std::vector<double> q_;  // [k-1][s][ja]
  std::vector<double> v_;  // [k-1][s]
};

double q_mdp(const TabularModel& model, int state, int joint_action, int steps_remaining);

/// Greedy joint action per (state, steps_remaining), from the table above.
std::vector<std::vector<int>> mdp_policy(const TabularModel& model, int horizon);

/// True iff every action recorded in the history matches the policy's
/// prescription given the preceding local observations.
bool is_consistent(const TabularModel& model, const PolicyTree& policy,
                   const JointHistory& history);

/// Probability of the joint history under the policy from the initial
/// belief (forward filtering over the state marginal). Zero for histories
/// inconsistent with the policy. The empty history has probability 1.
double joint_recurrence(const TabularModel& model, const PolicyTree& policy,
                        const JointHistory& history);

struct LocalHistory {
  std::vector<int> actions;
  std::vector<int> obs;
  int length() const { return static_cast<int>(actions.size()); }
};

/// Marginal probability of one agent's local history: the sum of
/// joint_recurrence over all completions of the other agents' histories.
double individual_recurrence(const TabularModel& model, const PolicyTree& policy,
                             int agent, const LocalHistory& local);

/// Belief after filtering the history's action/observation steps from b0.
Belief history_belief(const TabularModel& model, const JointHistory& history);

/// Action value at a joint history with the supplied continuation policy
/// (the recursion of the partially observable Bellman equation). At the
/// final step this is the belief-weighted immediate reward.
double q_under_policy(const TabularModel& model, const PolicyTree& policy,
                      const JointHistory& history, int joint_action);

/// Expected return of the joint policy from b0, by expanding all reachable
/// joint histories weighted by their recurrence probability.
double policy_value(const TabularModel& model, const PolicyTree& policy);

/// Exhaustive enumeration of joint policy trees; ties broken by the
/// lexicographically smallest tree serialization. Throws BudgetError when
/// the joint tree count exceeds 1e8.
std::pair<PolicyTree, double> brute_force_optimal(const TabularModel& model, int horizon);

struct MaaStats {
  long long nodes_generated = 0;
  long long nodes_expanded = 0;
  double root_bound = 0.0;
};

/// Best-first search over partially specified joint policies, expanding one
/// agent-depth layer at a time (agent 0's depth-d rule, then agent 1's, then
/// the next depth). Node priority is the exact prefix value plus the
/// belief-weighted Q_MDP completion bound; ties favor earlier insertion.
/// Returns an optimal policy and value. Throws BudgetError (carrying the
/// best incumbent) if more than `node_budget` nodes are generated.
std::pair<PolicyTree, double> maa_star(const TabularModel& model, int horizon,
                                       long long node_budget = 50'000'000,
                                       MaaStats* stats = nullptr);

}  // namespace aerial
