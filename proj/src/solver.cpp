#include "aerial/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace aerial {

namespace {

void require_null_initial_obs(const TabularModel& model) {
  if (model.initial_obs)
    throw std::runtime_error("exact solver requires a null initial observation");
}

}  // namespace

MdpValueTable::MdpValueTable(const TabularModel& model, int horizon)
    : horizon_(horizon), num_states_(model.num_states), num_actions_(model.num_joint_actions()) {
  if (horizon < 1) throw std::invalid_argument("MdpValueTable: horizon must be >= 1");
  const int S = num_states_, A = num_actions_;
  q_.assign(static_cast<size_t>(horizon) * S * A, 0.0);
  v_.assign(static_cast<size_t>(horizon) * S, 0.0);
  for (int k = 1; k <= horizon; ++k) {
    double* qk = &q_[static_cast<size_t>(k - 1) * S * A];
    double* vk = &v_[static_cast<size_t>(k - 1) * S];
    const double* vprev = k > 1 ? &v_[static_cast<size_t>(k - 2) * S] : nullptr;
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < A; ++a) {
        double val = model.rew(s, a);
        if (k > 1) {
          double exp_next = 0.0;
          for (int s2 = 0; s2 < S; ++s2) exp_next += model.trans(s, a, s2) * vprev[s2];
          val += model.discount * exp_next;
        }
        qk[static_cast<size_t>(s) * A + a] = val;
        best = std::max(best, val);
      }
      vk[s] = best;
    }
  }
}

double MdpValueTable::q(int state, int joint_action, int steps_remaining) const {
  if (steps_remaining < 1 || steps_remaining > horizon_)
    throw std::invalid_argument("MdpValueTable: steps_remaining out of range");
  return q_[(static_cast<size_t>(steps_remaining - 1) * num_states_ + state) * num_actions_ +
            joint_action];
}

double MdpValueTable::v(int state, int steps_remaining) const {
  if (steps_remaining < 1 || steps_remaining > horizon_)
    throw std::invalid_argument("MdpValueTable: steps_remaining out of range");
  return v_[static_cast<size_t>(steps_remaining - 1) * num_states_ + state];
}

int MdpValueTable::greedy_action(int state, int steps_remaining) const {
  int best = 0;
  double best_val = q(state, 0, steps_remaining);
  for (int a = 1; a < num_actions_; ++a) {
    const double val = q(state, a, steps_remaining);
    if (val > best_val) {
      best_val = val;
      best = a;
    }
  }
  return best;
}

double q_mdp(const TabularModel& model, int state, int joint_action, int steps_remaining) {
  return MdpValueTable(model, steps_remaining).q(state, joint_action, steps_remaining);
}

std::vector<std::vector<int>> mdp_policy(const TabularModel& model, int horizon) {
  MdpValueTable table(model, horizon);
  std::vector<std::vector<int>> policy(model.num_states, std::vector<int>(horizon));
  for (int s = 0; s < model.num_states; ++s)
    for (int k = 1; k <= horizon; ++k) policy[s][k - 1] = table.greedy_action(s, k);
  return policy;
}

bool is_consistent(const TabularModel& model, const PolicyTree& policy,
                   const JointHistory& history) {
  JointHistory prefix;
  for (int t = 0; t < history.length(); ++t) {
    if (policy.joint_action(model, prefix) != history.actions[t]) return false;
    prefix.push(history.actions[t], history.obs[t]);
  }
  return true;
}

double joint_recurrence(const TabularModel& model, const PolicyTree& policy,
                        const JointHistory& history) {
  require_null_initial_obs(model);
  if (!is_consistent(model, policy, history)) return 0.0;
  const int S = model.num_states;
  std::vector<double> mu = model.initial_belief;  // unnormalized state marginal
  std::vector<double> next(S);
  for (int t = 0; t < history.length(); ++t) {
    const int a = history.actions[t], z = history.obs[t];
    for (int s2 = 0; s2 < S; ++s2) {
      double mass = 0.0;
      for (int s = 0; s < S; ++s) mass += mu[s] * model.trans(s, a, s2);
      next[s2] = mass * model.obs(a, s2, z);
    }
    mu = next;
  }
  double p = 0.0;
  for (double x : mu) p += x;
  return p;
}

namespace {

void enumerate_completions(const TabularModel& model, const PolicyTree& policy, int agent,
                           const LocalHistory& local, int t, JointHistory& partial,
                           double& total) {
  if (t == local.length()) {
    total += joint_recurrence(model, policy, partial);
    return;
  }
  const int N = model.num_agents;
  // Other agents act per the policy on their own observation prefixes.
  std::vector<int> actions(N);
  for (int i = 0; i < N; ++i) {
    if (i == agent) {
      actions[i] = local.actions[t];
      continue;
    }
    std::vector<int> obs_seq(t);
    for (int u = 0; u < t; ++u) obs_seq[u] = model.agent_obs(partial.obs[u], i);
    actions[i] = policy.local_action(i, obs_seq);
  }
  const int ja = model.joint_action_index(actions);
  // Enumerate the other agents' observations for this step.
  std::vector<int> obs_digits(N, 0);
  obs_digits[agent] = local.obs[t];
  const int JO = model.num_joint_obs();
  for (int jo = 0; jo < JO; ++jo) {
    if (model.agent_obs(jo, agent) != local.obs[t]) continue;
    partial.push(ja, jo);
    enumerate_completions(model, policy, agent, local, t + 1, partial, total);
    partial.actions.pop_back();
    partial.obs.pop_back();
  }
}

}  // namespace

double individual_recurrence(const TabularModel& model, const PolicyTree& policy, int agent,
                             const LocalHistory& local) {
  require_null_initial_obs(model);
  if (local.length() == 0) return 1.0;
  JointHistory partial;
  double total = 0.0;
  enumerate_completions(model, policy, agent, local, 0, partial, total);
  return total;
}

Belief history_belief(const TabularModel& model, const JointHistory& history) {
  Belief b;
  b.probs = model.initial_belief;
  for (int t = 0; t < history.length(); ++t)
    b = belief_update(model, b, history.actions[t], history.obs[t]);
  return b;
}

namespace {

double q_under_policy_rec(const TabularModel& model, const PolicyTree& policy,
                          JointHistory& history, const Belief& belief, int joint_action) {
  const int S = model.num_states, JO = model.num_joint_obs();
  double rbar = 0.0;
  for (int s = 0; s < S; ++s) rbar += belief.probs[s] * model.rew(s, joint_action);
  if (history.length() == model.horizon - 1) return rbar;

  std::vector<double> mass(S, 0.0);
  for (int s2 = 0; s2 < S; ++s2)
    for (int s = 0; s < S; ++s) mass[s2] += belief.probs[s] * model.trans(s, joint_action, s2);
  double future = 0.0;
  for (int jo = 0; jo < JO; ++jo) {
    double w = 0.0;
    Belief next;
    next.probs.assign(S, 0.0);
    for (int s2 = 0; s2 < S; ++s2) {
      const double p = mass[s2] * model.obs(joint_action, s2, jo);
      next.probs[s2] = p;
      w += p;
    }
    if (w <= 0.0) continue;
    for (double& p : next.probs) p /= w;
    history.push(joint_action, jo);
    const int next_action = policy.joint_action(model, history);
    future += w * q_under_policy_rec(model, policy, history, next, next_action);
    history.actions.pop_back();
    history.obs.pop_back();
  }
  return rbar + model.discount * future;
}

}  // namespace

double q_under_policy(const TabularModel& model, const PolicyTree& policy,
                      const JointHistory& history, int joint_action) {
  require_null_initial_obs(model);
  if (history.length() >= model.horizon)
    throw std::invalid_argument("q_under_policy: history length exceeds the horizon");
  Belief b = history_belief(model, history);
  JointHistory h = history;
  return q_under_policy_rec(model, policy, h, b, joint_action);
}

namespace {

double policy_value_rec(const TabularModel& model, const PolicyTree& policy,
                        std::vector<double>& mu, int t, double gamma_t,
                        std::vector<std::vector<int>>& obs_seqs) {
  const int S = model.num_states, JO = model.num_joint_obs();
  std::vector<int> per_agent(model.num_agents);
  for (int i = 0; i < model.num_agents; ++i) per_agent[i] = policy.local_action(i, obs_seqs[i]);
  const int ja = model.joint_action_index(per_agent);
  double value = 0.0;
  for (int s = 0; s < S; ++s) value += mu[s] * model.rew(s, ja);
  value *= gamma_t;
  if (t + 1 == model.horizon) return value;

  std::vector<double> next(S);
  for (int jo = 0; jo < JO; ++jo) {
    double w = 0.0;
    for (int s2 = 0; s2 < S; ++s2) {
      double mass = 0.0;
      for (int s = 0; s < S; ++s) mass += mu[s] * model.trans(s, ja, s2);
      next[s2] = mass * model.obs(ja, s2, jo);
      w += next[s2];
    }
    if (w <= 0.0) continue;
    for (int i = 0; i < model.num_agents; ++i) obs_seqs[i].push_back(model.agent_obs(jo, i));
    std::vector<double> next_mu = next;
    value += policy_value_rec(model, policy, next_mu, t + 1, gamma_t * model.discount, obs_seqs);
    for (int i = 0; i < model.num_agents; ++i) obs_seqs[i].pop_back();
  }
  return value;
}

}  // namespace

double policy_value(const TabularModel& model, const PolicyTree& policy) {
  require_null_initial_obs(model);
  if (policy.depth != model.horizon)
    throw std::invalid_argument("policy_value: policy depth must equal the horizon");
  std::vector<double> mu = model.initial_belief;
  std::vector<std::vector<int>> obs_seqs(model.num_agents);
  return policy_value_rec(model, policy, mu, 0, 1.0, obs_seqs);
}

// ---------------------------------------------------------------------------
// Brute-force enumeration over complete joint policy trees.

namespace {

// Per-agent subtree counting and index arithmetic. A subtree of height k is
// encoded as  action * c[k-1]^Z + sum_z child_z * c[k-1]^(Z-1-z),  i.e. its
// preorder serialization read as a mixed-radix number, so ascending index
// order is lexicographic order.
struct TreeIndex {
  int num_actions = 0;
  int num_obs = 0;
  std::vector<double> count;       // count[k] = number of height-k subtrees (double: may be huge)
  std::vector<long long> count_ll; // valid while within budget

  void init(int A, int Z, int height) {
    num_actions = A;
    num_obs = Z;
    count.assign(height + 1, 0.0);
    count_ll.assign(height + 1, 0);
    count[0] = 1.0;
    count_ll[0] = 1;
    for (int k = 1; k <= height; ++k) {
      count[k] = A * std::pow(count[k - 1], Z);
      double c = 1.0;
      for (int z = 0; z < Z; ++z) c *= static_cast<double>(count_ll[k - 1]);
      const double total = static_cast<double>(A) * c;
      count_ll[k] = total < 9.0e18 ? static_cast<long long>(total) : -1;
    }
  }
};

struct BruteForce {
  const TabularModel& m;
  int T;
  std::vector<TreeIndex> ti;        // per agent
  std::vector<long long> stride_k;  // joint packing strides at current level
  std::vector<std::vector<std::vector<int>>> jo_digits;  // [jo][agent] obs digit

  explicit BruteForce(const TabularModel& model, int horizon) : m(model), T(horizon) {
    ti.resize(m.num_agents);
    for (int i = 0; i < m.num_agents; ++i) ti[i].init(m.num_actions[i], m.num_obs[i], T);
  }

  double joint_count_log(int height) const {
    double lg = 0.0;
    for (int i = 0; i < m.num_agents; ++i) lg += std::log(ti[i].count[height]);
    return lg;
  }

  // V tables per level: flat [joint_subtree][state].
  std::vector<double> level_table(int k, const std::vector<double>* below) const {
    const int S = m.num_states, JO = m.num_joint_obs();
    long long joint = 1;
    for (int i = 0; i < m.num_agents; ++i) joint *= ti[i].count_ll[k];
    std::vector<double> table(static_cast<size_t>(joint) * S);
    std::vector<long long> idx(m.num_agents, 0);
    std::vector<int> action(m.num_agents);
    std::vector<std::vector<long long>> children(m.num_agents);
    for (long long q = 0; q < joint; ++q) {
      decode_joint(q, k, idx);
      for (int i = m.num_agents - 1; i >= 0; --i)
        decode_agent(i, k, idx[i], &action[i], &children[i]);
      const int ja = m.joint_action_index(action);
      for (int s = 0; s < S; ++s) {
        double val = m.rew(s, ja);
        if (k > 1) {
          double acc = 0.0;
          for (int s2 = 0; s2 < S; ++s2) {
            const double tp = m.trans(s, ja, s2);
            if (tp == 0.0) continue;
            double obs_acc = 0.0;
            for (int jo = 0; jo < JO; ++jo) {
              const double op = m.obs(ja, s2, jo);
              if (op == 0.0) continue;
              long long packed = 0;
              for (int i = 0; i < m.num_agents; ++i)
                packed = packed * ti[i].count_ll[k - 1] + children[i][m.agent_obs(jo, i)];
              obs_acc += op * (*below)[static_cast<size_t>(packed) * S + s2];
            }
            acc += tp * obs_acc;
          }
          val += m.discount * acc;
        }
        table[static_cast<size_t>(q) * S + s] = val;
      }
    }
    return table;
  }

  void decode_joint(long long q, int k, std::vector<long long>& idx) const {
    for (int i = m.num_agents - 1; i >= 0; --i) {
      idx[i] = q % ti[i].count_ll[k];
      q /= ti[i].count_ll[k];
    }
  }

  void decode_agent(int agent, int k, long long idx, int* action,
                    std::vector<long long>* children) const {
    const TreeIndex& t = ti[agent];
    long long pw = 1;
    for (int z = 0; z < t.num_obs; ++z) pw *= t.count_ll[k - 1];
    *action = static_cast<int>(idx / pw);
    long long rest = idx % pw;
    children->assign(t.num_obs, 0);
    for (int z = t.num_obs - 1; z >= 0; --z) {
      (*children)[z] = rest % t.count_ll[k - 1];
      rest /= t.count_ll[k - 1];
    }
  }

  PolicyNode build_node(int agent, int k, long long idx) const {
    PolicyNode node;
    int action = 0;
    std::vector<long long> children;
    decode_agent(agent, k, idx, &action, &children);
    node.action = action;
    if (k > 1)
      for (int z = 0; z < ti[agent].num_obs; ++z)
        node.children.push_back(build_node(agent, k - 1, children[z]));
    return node;
  }
};

}  // namespace

std::pair<PolicyTree, double> brute_force_optimal(const TabularModel& model, int horizon) {
  require_null_initial_obs(model);
  if (horizon < 1) throw std::invalid_argument("brute_force_optimal: horizon must be >= 1");
  BruteForce bf(model, horizon);
  if (bf.joint_count_log(horizon) > std::log(1e8)) {
    BudgetError err("enumeration budget exceeded: more than 1e8 joint policy trees");
    throw err;
  }
  const int S = model.num_states;

  std::vector<double> below;
  for (int k = 1; k < horizon; ++k) below = bf.level_table(k, k > 1 ? &below : nullptr);

  long long joint_roots = 1;
  for (int i = 0; i < model.num_agents; ++i) joint_roots *= bf.ti[i].count_ll[horizon];

  const int JO = model.num_joint_obs();
  double best_value = -std::numeric_limits<double>::infinity();
  long long best_idx = 0;
  std::vector<long long> idx(model.num_agents);
  std::vector<int> action(model.num_agents);
  std::vector<std::vector<long long>> children(model.num_agents);
  for (long long q = 0; q < joint_roots; ++q) {
    bf.decode_joint(q, horizon, idx);
    for (int i = 0; i < model.num_agents; ++i)
      bf.decode_agent(i, horizon, idx[i], &action[i], &children[i]);
    const int ja = model.joint_action_index(action);
    double value = 0.0;
    for (int s = 0; s < S; ++s) {
      const double b = model.initial_belief[s];
      if (b == 0.0) continue;
      double val = model.rew(s, ja);
      if (horizon > 1) {
        double acc = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          const double tp = model.trans(s, ja, s2);
          if (tp == 0.0) continue;
          double obs_acc = 0.0;
          for (int jo = 0; jo < JO; ++jo) {
            const double op = model.obs(ja, s2, jo);
            if (op == 0.0) continue;
            long long packed = 0;
            for (int i = 0; i < model.num_agents; ++i)
              packed = packed * bf.ti[i].count_ll[horizon - 1] +
                       children[i][model.agent_obs(jo, i)];
            obs_acc += op * below[static_cast<size_t>(packed) * S + s2];
          }
          acc += tp * obs_acc;
        }
        val += model.discount * acc;
      }
      value += b * val;
    }
    if (value > best_value) {
      best_value = value;
      best_idx = q;
    }
  }

  PolicyTree best;
  best.depth = horizon;
  bf.decode_joint(best_idx, horizon, idx);
  for (int i = 0; i < model.num_agents; ++i) best.agents.push_back(bf.build_node(i, horizon, idx[i]));
  return {best, best_value};
}

// ---------------------------------------------------------------------------
// MAA*: best-first search over partially specified joint policies.

namespace {

struct Reach {
  std::vector<double> mu;   // unnormalized state marginal (weight = sum)
  std::vector<int> ohist;   // per-agent observation-history index at this depth
};

struct MaaNode {
  std::vector<std::uint8_t> rules;  // concatenated [agent][layer][obs-history index]
  double f = 0.0;
  std::uint64_t seq = 0;
  std::uint16_t depth = 0;       // layers complete for every agent
  std::uint16_t next_agent = 0;  // agent whose layer `depth` is filled next
};

struct MaaNodeCmp {
  bool operator()(const MaaNode& a, const MaaNode& b) const {
    if (a.f != b.f) return a.f < b.f;
    return a.seq > b.seq;  // ties: earlier insertion first
  }
};

class MaaSearch {
 public:
  MaaSearch(const TabularModel& model, int horizon, long long budget)
      : m_(model), T_(horizon), budget_(budget), qmdp_(model, horizon) {
    layer_size_.resize(m_.num_agents);
    agent_off_.resize(m_.num_agents + 1, 0);
    for (int i = 0; i < m_.num_agents; ++i) {
      layer_size_[i].resize(T_ + 1, 0);
      int sz = 1;
      int total = 0;
      for (int d = 0; d < T_; ++d) {
        layer_size_[i][d] = sz;
        total += sz;
        sz *= m_.num_obs[i];
      }
      agent_off_[i + 1] = agent_off_[i] + total;
    }
    layer_off_.resize(m_.num_agents);
    for (int i = 0; i < m_.num_agents; ++i) {
      layer_off_[i].resize(T_, 0);
      int off = 0;
      for (int d = 0; d < T_; ++d) {
        layer_off_[i][d] = off;
        off += layer_size_[i][d];
      }
    }
    gamma_pow_.resize(T_ + 1, 1.0);
    for (int t = 1; t <= T_; ++t) gamma_pow_[t] = gamma_pow_[t - 1] * m_.discount;
    action_stride_.assign(m_.num_agents, 1);
    for (int i = m_.num_agents - 2; i >= 0; --i)
      action_stride_[i] = action_stride_[i + 1] * m_.num_actions[i + 1];
  }

  std::pair<PolicyTree, double> run(MaaStats* stats) {
    MaaNode root;
    root.rules.assign(agent_off_.back(), 0);
    root.f = root_bound(root);
    root.seq = seq_++;
    root_bound_value_ = root.f;

    // Greedy dive for an initial incumbent: follow the best-bound child to a
    // complete policy before starting the best-first loop.
    {
      MaaNode cur = root;
      while (true) {
        std::vector<MaaNode> kids;
        expand(cur, &kids);
        if (kids.empty()) break;
        size_t best = 0;
        for (size_t i = 1; i < kids.size(); ++i)
          if (kids[i].f > kids[best].f) best = i;
        cur = std::move(kids[best]);
      }
    }

    std::priority_queue<MaaNode, std::vector<MaaNode>, MaaNodeCmp> open;
    open.push(std::move(root));
    std::vector<MaaNode> kids;
    while (!open.empty()) {
      MaaNode node = open.top();
      open.pop();
      if (have_best_ && node.f <= incumbent_ + 1e-12) break;
      kids.clear();
      expand(node, &kids);
      ++expanded_;
      for (MaaNode& k : kids) open.push(std::move(k));
    }
    if (!have_best_) throw std::runtime_error("maa_star: search ended without a policy");
    if (stats) {
      stats->nodes_generated = generated_;
      stats->nodes_expanded = expanded_;
      stats->root_bound = root_bound_value_;
    }
    return {rules_to_tree(best_rules_), incumbent_};
  }

 private:
  int rule_at(const std::vector<std::uint8_t>& rules, int agent, int layer, int ohist) const {
    return rules[agent_off_[agent] + layer_off_[agent][layer] + ohist];
  }
  void set_rule(std::vector<std::uint8_t>& rules, int agent, int layer, int ohist,
                int action) const {
    rules[agent_off_[agent] + layer_off_[agent][layer] + ohist] =
        static_cast<std::uint8_t>(action);
  }

  // Rolls the specified prefix (layers < depth) forward, accumulating the
  // exact expected prefix reward and the frontier of reachable weighted
  // joint histories.
  double roll(const MaaNode& node, std::vector<Reach>* frontier) const {
    const int S = m_.num_states, JO = m_.num_joint_obs();
    frontier->clear();
    Reach start;
    start.mu = m_.initial_belief;
    start.ohist.assign(m_.num_agents, 0);
    frontier->push_back(std::move(start));
    double g = 0.0;
    std::vector<Reach> next_frontier;
    std::vector<int> actions(m_.num_agents);
    for (int t = 0; t < node.depth; ++t) {
      next_frontier.clear();
      for (const Reach& r : *frontier) {
        for (int i = 0; i < m_.num_agents; ++i) actions[i] = rule_at(node.rules, i, t, r.ohist[i]);
        const int ja = m_.joint_action_index(actions);
        double rbar = 0.0;
        for (int s = 0; s < S; ++s) rbar += r.mu[s] * m_.rew(s, ja);
        g += gamma_pow_[t] * rbar;
        for (int jo = 0; jo < JO; ++jo) {
          Reach nr;
          nr.mu.assign(S, 0.0);
          double w = 0.0;
          for (int s2 = 0; s2 < S; ++s2) {
            double mass = 0.0;
            for (int s = 0; s < S; ++s) mass += r.mu[s] * m_.trans(s, ja, s2);
            nr.mu[s2] = mass * m_.obs(ja, s2, jo);
            w += nr.mu[s2];
          }
          if (w <= 0.0) continue;
          nr.ohist.resize(m_.num_agents);
          for (int i = 0; i < m_.num_agents; ++i)
            nr.ohist[i] = r.ohist[i] * m_.num_obs[i] + m_.agent_obs(jo, i);
          next_frontier.push_back(std::move(nr));
        }
      }
      frontier->swap(next_frontier);
    }
    return g;
  }

  double root_bound(const MaaNode& node) {
    std::vector<Reach> frontier;
    const double g = roll(node, &frontier);
    double h = 0.0;
    for (const Reach& r : frontier) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m_.num_joint_actions(); ++a) {
        double val = 0.0;
        for (int s = 0; s < m_.num_states; ++s) val += r.mu[s] * qmdp_.q(s, a, T_ - node.depth);
        best = std::max(best, val);
      }
      h += best;
    }
    return g + gamma_pow_[node.depth] * h;
  }

  // Generates all children of `node` (filling agent node.next_agent's rule at
  // layer node.depth). Complete children update the incumbent; partial
  // children with bound above the incumbent are appended to `out`.
  void expand(const MaaNode& node, std::vector<MaaNode>* out) {
    const int d = node.depth;
    if (d >= T_) return;
    const int j = node.next_agent;
    const int S = m_.num_states;
    const int k = T_ - d;  // steps remaining including this layer
    const bool completes_policy = (d == T_ - 1) && (j == m_.num_agents - 1);

    std::vector<Reach> frontier;
    const double g = roll(node, &frontier);

    // Reachable observation-history slots for agent j at this layer.
    std::vector<int> slot_of(layer_size_[j][d], -1);
    std::vector<int> slots;
    for (const Reach& r : frontier) {
      if (slot_of[r.ohist[j]] < 0) {
        slot_of[r.ohist[j]] = static_cast<int>(slots.size());
        slots.push_back(r.ohist[j]);
      }
    }
    const int num_slots = static_cast<int>(slots.size());
    const int A_j = m_.num_actions[j];

    // c[slot][a]: weighted best-case completion when agent j plays `a` at
    // that observation history, maximizing over the still-free agents.
    std::vector<double> c(static_cast<size_t>(num_slots) * A_j, 0.0);
    std::vector<int> free_agents;
    for (int i = j + 1; i < m_.num_agents; ++i) free_agents.push_back(i);
    for (const Reach& r : frontier) {
      const int slot = slot_of[r.ohist[j]];
      int fixed_pack = 0;
      for (int i = 0; i < j; ++i)
        fixed_pack += rule_at(node.rules, i, d, r.ohist[i]) * action_stride_[i];
      for (int a = 0; a < A_j; ++a) {
        const int base = fixed_pack + a * action_stride_[j];
        double best = -std::numeric_limits<double>::infinity();
        enumerate_free(free_agents, 0, base, [&](int ja) {
          double val = 0.0;
          for (int s = 0; s < S; ++s) val += r.mu[s] * qmdp_.q(s, ja, k);
          best = std::max(best, val);
        });
        c[static_cast<size_t>(slot) * A_j + a] += best;
      }
    }

    // Enumerate rules over reachable slots; unreachable slots keep action 0.
    long long num_children = 1;
    for (int s = 0; s < num_slots; ++s) {
      num_children *= A_j;
      if (num_children > budget_) break;
    }
    std::vector<int> assign(num_slots, 0);
    const double scale = gamma_pow_[d];
    while (true) {
      double bound = g;
      for (int s = 0; s < num_slots; ++s) bound += scale * c[static_cast<size_t>(s) * A_j + assign[s]];
      if ((generated_ += 1) > budget_) {
        BudgetError err("maa_star: node budget exceeded" +
                        (have_best_ ? "; best incumbent " + std::to_string(incumbent_) : std::string()));
        err.best_incumbent = incumbent_;
        err.has_incumbent = have_best_;
        throw err;
      }
      if (completes_policy) {
        // Fully constrained last layer: the bound is the exact policy value.
        if (!have_best_ || bound > incumbent_) {
          incumbent_ = bound;
          have_best_ = true;
          best_rules_ = node.rules;
          for (int s = 0; s < num_slots; ++s) set_rule(best_rules_, j, d, slots[s], assign[s]);
        }
      } else if (!have_best_ || bound > incumbent_) {
        MaaNode child;
        child.rules = node.rules;
        for (int s = 0; s < num_slots; ++s) set_rule(child.rules, j, d, slots[s], assign[s]);
        child.f = bound;
        child.seq = seq_++;
        if (j + 1 == m_.num_agents) {
          child.depth = static_cast<std::uint16_t>(d + 1);
          child.next_agent = 0;
        } else {
          child.depth = static_cast<std::uint16_t>(d);
          child.next_agent = static_cast<std::uint16_t>(j + 1);
        }
        out->push_back(std::move(child));
      }
      int pos = num_slots - 1;
      while (pos >= 0 && ++assign[pos] == A_j) assign[pos--] = 0;
      if (pos < 0) break;
    }
  }

  template <typename F>
  void enumerate_free(const std::vector<int>& free_agents, size_t idx, int packed, F&& fn) const {
    if (idx == free_agents.size()) {
      fn(packed);
      return;
    }
    const int agent = free_agents[idx];
    for (int a = 0; a < m_.num_actions[agent]; ++a)
      enumerate_free(free_agents, idx + 1, packed + a * action_stride_[agent], fn);
  }

  PolicyNode rules_to_node(const std::vector<std::uint8_t>& rules, int agent, int layer,
                           int ohist) const {
    PolicyNode n;
    n.action = rule_at(rules, agent, layer, ohist);
    if (layer + 1 < T_)
      for (int z = 0; z < m_.num_obs[agent]; ++z)
        n.children.push_back(rules_to_node(rules, agent, layer + 1, ohist * m_.num_obs[agent] + z));
    return n;
  }

  PolicyTree rules_to_tree(const std::vector<std::uint8_t>& rules) const {
    PolicyTree p;
    p.depth = T_;
    for (int i = 0; i < m_.num_agents; ++i) p.agents.push_back(rules_to_node(rules, i, 0, 0));
    return p;
  }

  const TabularModel& m_;
  int T_;
  long long budget_;
  MdpValueTable qmdp_;
  std::vector<std::vector<int>> layer_size_;  // [agent][layer] = |Z_i|^layer
  std::vector<std::vector<int>> layer_off_;
  std::vector<int> agent_off_;
  std::vector<double> gamma_pow_;
  std::vector<int> action_stride_;
  double incumbent_ = -std::numeric_limits<double>::infinity();
  bool have_best_ = false;
  std::vector<std::uint8_t> best_rules_;
  std::uint64_t seq_ = 0;
  long long generated_ = 0;
  long long expanded_ = 0;
  double root_bound_value_ = 0.0;
};

}  // namespace

std::pair<PolicyTree, double> maa_star(const TabularModel& model, int horizon,
                                       long long node_budget, MaaStats* stats) {
  require_null_initial_obs(model);
  if (horizon < 1) throw std::invalid_argument("maa_star: horizon must be >= 1");
  MaaSearch search(model, horizon, node_budget);
  return search.run(stats);
}

}  // namespace aerial
