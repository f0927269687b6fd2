#pragma once

#include <string>
#include <vector>

#include "aerial/env.hpp"
#include "aerial/metrics.hpp"
#include "aerial/nn.hpp"

namespace aerial {

/// Which conditioner the mixing network sees. Everything else in the
/// training loop is shared.
///   aerial       - attention embedding of the detached joint memory
///   no_attention - concatenated detached joint memory
///   raw_history  - flattened padded joint observation-action history
///                  concatenated with the true state
///   state_based  - true state features
enum class VariantKind { kAerial, kNoAttention, kRawHistory, kStateBased };

VariantKind variant_from_string(const std::string& name);
std::string to_string(VariantKind v);
bool variant_reads_state(VariantKind v);

/// Shapes shared by the agent network, attention stack, and mixer.
struct NetDims {
  int num_agents = 0;
  int obs_dim = 0;
  int num_actions = 0;
  int state_dim = 0;
  int max_steps = 0;
  int gru_units = 64;
  int attn_heads = 4;
  int d_att = 64;
  int rec_mlp_layers = 3;
  int rec_mlp_units = 64;
  int mixer_embed = 32;

  int agent_input_dim() const { return obs_dim + num_actions + num_agents; }
  int raw_history_dim() const {
    return num_agents * max_steps * (obs_dim + num_actions) + state_dim;
  }
  int cond_dim(VariantKind v) const;
};

NetDims dims_for(const Environment& env);

/// Creates agent network, variant-specific attention stack, and mixer
/// parameters in a fixed order (deterministic under the seed).
void init_networks(ParameterStore& store, const NetDims& dims, VariantKind variant,
                   RngStream& rng);

struct EpisodeTrace {
  std::vector<std::vector<std::vector<double>>> obs;        // [t][agent][obs_dim]
  std::vector<std::vector<int>> actions;                    // [t][agent]
  std::vector<std::vector<std::vector<std::uint8_t>>> masks;  // [t][agent][A]
  std::vector<double> rewards;
  std::vector<std::vector<double>> states;       // [t][state_dim], state variants only
  std::vector<std::vector<double>> embeddings;   // [t][units], aerial only
  std::vector<double> returns;                   // discounted G_t
  bool terminated = false;
  bool won = false;

  int length() const { return static_cast<int>(rewards.size()); }
};

/// Per-agent epsilon-greedy over masked utilities; ties break to the lowest
/// action index, exploration draws one uniform action among the available
/// ones per agent.
std::vector<int> select_actions(const std::vector<std::vector<double>>& utilities,
                                const std::vector<std::vector<std::uint8_t>>& masks,
                                double epsilon, RngStream& rng);

/// Greedy utility evaluation for decentralized execution: keeps per-agent
/// GRU hidden states between steps, shared parameters across agents.
class AgentRuntime {
 public:
  AgentRuntime(const ParameterStore& store, const NetDims& dims);

  void begin_episode();
  /// Advances the memory with this step's observations and the previous
  /// joint action (-1 entries mean "none") and returns per-agent utilities.
  std::vector<std::vector<double>> utilities(const std::vector<std::vector<double>>& obs,
                                             const std::vector<int>& prev_actions);
  const Tensor& hidden() const { return hidden_; }

 private:
  const ParameterStore* store_;
  NetDims dims_;
  Tensor hidden_;
};

/// Rolls one episode with epsilon-greedy decentralized action selection,
/// recording what the variant's training path needs. Only state variants
/// touch env.state_features().
EpisodeTrace run_episode(Environment& env, const ParameterStore& store, const NetDims& dims,
                         VariantKind variant, double epsilon, RngStream& env_rng,
                         RngStream& action_rng, double gamma);

/// One TD step over a batch of episodes: unrolls the online and target
/// networks, forms y_t = r_t + gamma * Qtot_target(t+1) (y = r at episode
/// end), applies one RMSProp update, returns the mean squared TD error.
double td_train_step(ParameterStore& store, const ParameterStore& target_store,
                     const NetDims& dims, VariantKind variant,
                     const std::vector<const EpisodeTrace*>& batch, double gamma, double lr,
                     bool double_q = false);

struct TrainConfig {
  long long total_env_steps = 20000;
  int buffer_capacity = 5000;
  int batch_size = 32;
  int target_update_interval = 200;
  double eps_start = 1.0;
  double eps_end = 0.05;
  long long eps_anneal_steps = 10000;
  double discount = 1.0;
  double lr = 5e-4;
  long long eval_interval = 2000;
  int eval_episodes = 100;
  int train_every_episodes = 1;
  bool double_q = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EvalResult {
  double mean_return = 0.0;
  double win_rate = 0.0;
  double ci_half = 0.0;
  int episodes = 0;
};

/// Greedy (epsilon = 0) evaluation rollouts.
EvalResult evaluate(const EnvFactory& factory, const ParameterStore& store, const NetDims& dims,
                    int episodes, RngStream rng, double gamma);

/// Evaluation of an arbitrary fixed policy (step index and observations to
/// joint action); used to cross-check against exact policy values.
using FixedPolicy = std::function<std::vector<int>(int step, const std::vector<std::vector<double>>& obs)>;
EvalResult evaluate_fixed(const EnvFactory& factory, const FixedPolicy& policy, int episodes,
                          RngStream rng, double gamma);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);
  void push(EpisodeTrace trace);
  int size() const { return static_cast<int>(store_.size()); }
  /// Uniform sample of `batch` distinct episodes (reproducible under rng).
  std::vector<const EpisodeTrace*> sample(int batch, RngStream& rng) const;

 private:
  int capacity_;
  size_t next_ = 0;
  std::vector<EpisodeTrace> store_;
};

struct TrainResult {
  ParameterStore store;
  NetDims dims;
  std::vector<MetricsRow> metrics;
  long long env_steps = 0;
  long long episodes = 0;
};

/// Full training loop: alternates episode collection and TD updates, syncs
/// target networks on the configured interval, anneals epsilon linearly,
/// and appends a greedy evaluation row per eval interval plus one final row.
TrainResult train(const EnvFactory& factory, VariantKind variant, const TrainConfig& config,
                  const std::string& run_id = "run");

// Internals shared with tests and diagnostics: evaluation of hidden states,
// utilities, and the mixed value for a trace prefix under given parameters.
std::vector<Tensor> unroll_hidden_states(const ParameterStore& store, const NetDims& dims,
                                         const EpisodeTrace& trace);
std::vector<std::vector<double>> utilities_from_hidden(const ParameterStore& store,
                                                       const NetDims& dims, const Tensor& hidden);
double qtot_eval(const ParameterStore& store, const NetDims& dims, VariantKind variant,
                 const EpisodeTrace& trace, int t, const Tensor& hidden,
                 const std::vector<int>& actions);

}  // namespace aerial
