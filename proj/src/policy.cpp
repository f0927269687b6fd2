#include "aerial/policy.hpp"

#include <sstream>
#include <stdexcept>

namespace aerial {

int PolicyTree::local_action(int agent, const std::vector<int>& obs_seq) const {
  const PolicyNode* node = &agents.at(agent);
  for (int z : obs_seq) node = &node->children.at(z);
  return node->action;
}

int PolicyTree::joint_action(const TabularModel& model, const JointHistory& history) const {
  std::vector<int> per_agent(model.num_agents);
  std::vector<int> obs_seq(history.length());
  for (int i = 0; i < model.num_agents; ++i) {
    for (int t = 0; t < history.length(); ++t) obs_seq[t] = model.agent_obs(history.obs[t], i);
    per_agent[i] = local_action(i, obs_seq);
  }
  return model.joint_action_index(per_agent);
}

namespace {

void validate_node(const PolicyNode& node, int depth_left, int num_obs, int num_act) {
  if (node.action < 0 || node.action >= num_act)
    throw std::runtime_error("policy tree: action out of range");
  if (depth_left == 1) {
    if (!node.children.empty()) throw std::runtime_error("policy tree: leaf has children");
    return;
  }
  if (static_cast<int>(node.children.size()) != num_obs)
    throw std::runtime_error("policy tree: internal node must have one child per observation");
  for (const PolicyNode& c : node.children) validate_node(c, depth_left - 1, num_obs, num_act);
}

PolicyNode uniform_node(int depth_left, int num_obs, int action) {
  PolicyNode n;
  n.action = action;
  if (depth_left > 1) n.children.assign(num_obs, uniform_node(depth_left - 1, num_obs, action));
  return n;
}

void print_node(std::ostringstream& out, const TabularModel& m, int agent,
                const PolicyNode& node, const std::string& indent, const std::string& label) {
  out << indent << label << m.action_label(agent, node.action) << "\n";
  for (size_t z = 0; z < node.children.size(); ++z)
    print_node(out, m, agent, node.children[z], indent + "  ",
               m.obs_label(agent, static_cast<int>(z)) + " -> ");
}

}  // namespace

void PolicyTree::validate(const TabularModel& model) const {
  if (static_cast<int>(agents.size()) != model.num_agents)
    throw std::runtime_error("policy tree: wrong number of agents");
  if (depth < 1) throw std::runtime_error("policy tree: depth must be >= 1");
  for (int i = 0; i < model.num_agents; ++i)
    validate_node(agents[i], depth, model.num_obs[i], model.num_actions[i]);
}

PolicyTree PolicyTree::uniform(const TabularModel& model, int depth,
                               const std::vector<int>& action_per_agent) {
  PolicyTree p;
  p.depth = depth;
  for (int i = 0; i < model.num_agents; ++i)
    p.agents.push_back(uniform_node(depth, model.num_obs[i], action_per_agent.at(i)));
  return p;
}

std::string PolicyTree::to_text(const TabularModel& model) const {
  std::ostringstream out;
  for (size_t i = 0; i < agents.size(); ++i) {
    out << "agent " << i << ":\n";
    print_node(out, model, static_cast<int>(i), agents[i], "  ", "");
  }
  return out.str();
}

}  // namespace aerial
