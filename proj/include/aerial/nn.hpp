#pragma once

#include <map>
#include <string>
#include <vector>

#include "aerial/rng.hpp"
#include "aerial/tensor.hpp"

namespace aerial {

using GradMap = std::map<std::string, Tensor>;

/// Named trainable tensors plus per-parameter RMSProp mean-square state.
/// Shapes are fixed at creation; updates and lookups are by name.
class ParameterStore {
 public:
  /// Registers a parameter initialized uniformly in +-1/sqrt(fan_in).
  void create(const std::string& name, int rows, int cols, int fan_in, RngStream& rng);
  void create_zeros(const std::string& name, int rows, int cols);

  bool has(const std::string& name) const { return params_.count(name) > 0; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;

  /// RMSProp step: ms <- decay*ms + (1-decay)*g^2; p <- p - lr*g/sqrt(ms+eps).
  void rmsprop_update(const GradMap& grads, double lr, double decay = 0.99,
                      double eps = 1e-5);

  /// Overwrites this store's values with `src`'s (target-network sync).
  /// Shapes and names must match exactly.
  void copy_values_from(const ParameterStore& src);

  void save(const std::string& path) const;
  void load(const std::string& path);

  const std::map<std::string, Tensor>& values() const;
  std::vector<std::string> names() const;
  size_t size() const { return params_.size(); }

 private:
  struct Entry {
    Tensor value;
    Tensor ms;  // mean-square accumulator
  };
  std::map<std::string, Entry> params_;
  mutable std::map<std::string, Tensor> values_view_;
};

/// Binds a ParameterStore to a Tape for one forward/backward pass. Each
/// parameter becomes a single leaf Var, shared across every use on the tape,
/// so gradients from repeated use (GRU unrolling, parameter sharing across
/// agents) accumulate on one node.
class ParamCtx {
 public:
  ParamCtx(Tape& tape, ParameterStore& store, bool trainable)
      : tape_(&tape), store_(&store), trainable_(trainable) {}

  Var operator[](const std::string& name);
  Tape& tape() { return *tape_; }

  /// Adds d(loss)/d(param) for every parameter leaf used on this tape.
  void collect_grads(GradMap& grads) const;

 private:
  Tape* tape_;
  ParameterStore* store_;
  bool trainable_;
  std::map<std::string, Var> bound_;
};

// ---------------------------------------------------------------------------
// Network blocks. All of them read parameters by a name prefix; the matching
// init_* function must have been called on the store first.

enum class Activation { kLinear, kRelu, kTanh, kSigmoid };

struct MlpSpec {
  std::vector<int> widths;           // hidden and output widths
  std::vector<Activation> acts;      // one per layer
  int input_dim = 0;
};

void init_mlp(ParameterStore& store, const std::string& prefix, const MlpSpec& spec,
              RngStream& rng);
Var mlp_forward(ParamCtx& ctx, const std::string& prefix, const MlpSpec& spec, Var input);

struct GruSpec {
  int input_dim = 0;
  int units = 64;
};

void init_gru(ParameterStore& store, const std::string& prefix, const GruSpec& spec,
              RngStream& rng);
/// One GRU cell update for a batch of rows: input [b, in], hidden [b, units].
Var gru_step(ParamCtx& ctx, const std::string& prefix, const GruSpec& spec, Var input,
             Var hidden);

struct AttentionSpec {
  int input_dim = 0;   // width of each agent's memory row
  int heads = 4;
  int d_att = 64;
};

void init_attention(ParameterStore& store, const std::string& prefix,
                    const AttentionSpec& spec, RngStream& rng);
/// Multi-head self-attention over the agent axis: joint memory [N, d] to
/// summed head outputs [N, d_att]. No positional encoding, no masking.
Var attention_heads(ParamCtx& ctx, const std::string& prefix, const AttentionSpec& spec,
                    Var joint_memory);

struct RecEmbedSpec {
  AttentionSpec attention;
  int mlp_layers = 3;
  int mlp_units = 64;
};

void init_rec_embed(ParameterStore& store, const std::string& prefix,
                    const RecEmbedSpec& spec, RngStream& rng);
/// Attention over agents, per-row MLP stack, then mean-pool over the agent
/// axis into a fixed-width embedding [1, mlp_units]. Pass the joint memory
/// already detached; this path must not differentiate into the agent RNNs.
Var rec_embed(ParamCtx& ctx, const std::string& prefix, const RecEmbedSpec& spec,
              Var joint_memory);

struct MixerSpec {
  int num_agents = 0;
  int cond_dim = 0;    // conditioner width
  int embed = 32;      // mixing hidden width
};

void init_mixer(ParameterStore& store, const std::string& prefix, const MixerSpec& spec,
                RngStream& rng);
/// Monotone two-layer mixing of per-agent utilities [1, N] under a
/// conditioning vector [1, cond_dim]. Hypernetworks produce the mixing
/// weights (absolute value applied) and biases; the result is a scalar
/// non-decreasing in every utility.
Var qmix_mix(ParamCtx& ctx, const std::string& prefix, const MixerSpec& spec,
             Var utilities, Var conditioner);

}  // namespace aerial
