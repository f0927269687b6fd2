#include "aerial/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aerial {

void ParameterStore::create(const std::string& name, int rows, int cols, int fan_in,
                            RngStream& rng) {
  if (params_.count(name)) throw std::runtime_error("parameter already exists: " + name);
  Entry e;
  e.value = Tensor(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
  for (double& v : e.value.data) v = (2.0 * rng.uniform() - 1.0) * bound;
  e.ms = Tensor(rows, cols);
  params_.emplace(name, std::move(e));
}

void ParameterStore::create_zeros(const std::string& name, int rows, int cols) {
  if (params_.count(name)) throw std::runtime_error("parameter already exists: " + name);
  Entry e;
  e.value = Tensor(rows, cols);
  e.ms = Tensor(rows, cols);
  params_.emplace(name, std::move(e));
}

Tensor& ParameterStore::value(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
  return it->second.value;
}

const Tensor& ParameterStore::value(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
  return it->second.value;
}

void ParameterStore::rmsprop_update(const GradMap& grads, double lr, double decay,
                                    double eps) {
  for (const auto& [name, g] : grads) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("gradient for unknown parameter: " + name);
    Entry& e = it->second;
    if (!g.same_shape(e.value))
      throw std::invalid_argument("gradient shape mismatch for " + name + ": " + g.shape_str() +
                                  " vs " + e.value.shape_str());
    for (size_t i = 0; i < g.data.size(); ++i) {
      e.ms.data[i] = decay * e.ms.data[i] + (1.0 - decay) * g.data[i] * g.data[i];
      e.value.data[i] -= lr * g.data[i] / std::sqrt(e.ms.data[i] + eps);
    }
  }
}

void ParameterStore::copy_values_from(const ParameterStore& src) {
  if (src.params_.size() != params_.size())
    throw std::runtime_error("parameter store mismatch in copy_values_from");
  auto it = params_.begin();
  auto jt = src.params_.begin();
  for (; it != params_.end(); ++it, ++jt) {
    if (it->first != jt->first || !it->second.value.same_shape(jt->second.value))
      throw std::runtime_error("parameter store mismatch at " + it->first);
    it->second.value = jt->second.value;
  }
}

const std::map<std::string, Tensor>& ParameterStore::values() const {
  values_view_.clear();
  for (const auto& [name, e] : params_) values_view_.emplace(name, e.value);
  return values_view_;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, e] : params_) out.push_back(name);
  return out;
}

// Checkpoint format: line-oriented text, shortest round-trip doubles.
//   aerial-checkpoint v1
//   tensor <name> <rows> <cols>
//   <rows*cols space-separated values>
void ParameterStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << "aerial-checkpoint v1\n";
  char buf[64];
  for (const auto& [name, e] : params_) {
    out << "tensor " << name << ' ' << e.value.rows() << ' ' << e.value.cols() << '\n';
    for (size_t i = 0; i < e.value.data.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", e.value.data[i]);
      out << buf << (i + 1 == e.value.data.size() ? '\n' : ' ');
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void ParameterStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string header;
  std::getline(in, header);
  if (header != "aerial-checkpoint v1")
    throw std::runtime_error("unsupported checkpoint format in " + path);
  params_.clear();
  std::string tag;
  while (in >> tag) {
    if (tag != "tensor") throw std::runtime_error("malformed checkpoint near '" + tag + "'");
    std::string name;
    int rows = 0, cols = 0;
    in >> name >> rows >> cols;
    if (!in || rows <= 0 || cols <= 0)
      throw std::runtime_error("malformed tensor header in " + path);
    Entry e;
    e.value = Tensor(rows, cols);
    for (double& v : e.value.data) in >> v;
    if (!in) throw std::runtime_error("truncated tensor data for " + name);
    e.ms = Tensor(rows, cols);
    params_.emplace(name, std::move(e));
  }
}

Var ParamCtx::operator[](const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = tape_->leaf(store_->value(name), trainable_);
  bound_.emplace(name, v);
  return v;
}

void ParamCtx::collect_grads(GradMap& grads) const {
  for (const auto& [name, var] : bound_) {
    const Tensor* g = nullptr;
    try {
      g = &tape_->grad(var);
    } catch (const std::runtime_error&) {
      continue;  // parameter unused by the loss
    }
    auto it = grads.find(name);
    if (it == grads.end()) {
      grads.emplace(name, *g);
    } else {
      for (size_t i = 0; i < g->data.size(); ++i) it->second.data[i] += g->data[i];
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

Var apply_act(Tape& t, Var x, Activation a) {
  switch (a) {
    case Activation::kLinear: return x;
    case Activation::kRelu: return t.relu(x);
    case Activation::kTanh: return t.tanh_act(x);
    case Activation::kSigmoid: return t.sigmoid(x);
  }
  return x;
}

std::string layer_w(const std::string& prefix, int i) {
  return prefix + "/w" + std::to_string(i);
}
std::string layer_b(const std::string& prefix, int i) {
  return prefix + "/b" + std::to_string(i);
}

}  // namespace

void init_mlp(ParameterStore& store, const std::string& prefix, const MlpSpec& spec,
              RngStream& rng) {
  if (spec.widths.size() != spec.acts.size())
    throw std::invalid_argument("mlp spec: widths/acts length mismatch");
  int in = spec.input_dim;
  for (size_t i = 0; i < spec.widths.size(); ++i) {
    const int out = spec.widths[i];
    store.create(layer_w(prefix, static_cast<int>(i)), in, out, in, rng);
    store.create(layer_b(prefix, static_cast<int>(i)), 1, out, in, rng);
    in = out;
  }
}

Var mlp_forward(ParamCtx& ctx, const std::string& prefix, const MlpSpec& spec, Var input) {
  Tape& t = ctx.tape();
  if (t.val(input).cols() != spec.input_dim)
    throw std::invalid_argument("mlp_forward: input is " + t.val(input).shape_str() +
                                ", expected cols = " + std::to_string(spec.input_dim));
  Var x = input;
  for (size_t i = 0; i < spec.widths.size(); ++i) {
    Var z = t.add_rowvec(t.matmul(x, ctx[layer_w(prefix, static_cast<int>(i))]),
                         ctx[layer_b(prefix, static_cast<int>(i))]);
    x = apply_act(t, z, spec.acts[i]);
  }
  return x;
}

void init_gru(ParameterStore& store, const std::string& prefix, const GruSpec& spec,
              RngStream& rng) {
  const int in = spec.input_dim, u = spec.units;
  for (const char* gate : {"z", "r", "c"}) {
    store.create(prefix + "/wx" + gate, in, u, in, rng);
    store.create(prefix + "/wh" + gate, u, u, u, rng);
    store.create(prefix + "/b" + gate, 1, u, u, rng);
  }
}

Var gru_step(ParamCtx& ctx, const std::string& prefix, const GruSpec& spec, Var input,
             Var hidden) {
  Tape& t = ctx.tape();
  const Tensor& x = t.val(input);
  const Tensor& h = t.val(hidden);
  if (x.cols() != spec.input_dim || h.cols() != spec.units || x.rows() != h.rows())
    throw std::invalid_argument("gru_step: shapes " + x.shape_str() + " and " + h.shape_str() +
                                " do not fit spec (in=" + std::to_string(spec.input_dim) +
                                ", units=" + std::to_string(spec.units) + ")");
  Var z = t.sigmoid(t.add_rowvec(
      t.add(t.matmul(input, ctx[prefix + "/wxz"]), t.matmul(hidden, ctx[prefix + "/whz"])),
      ctx[prefix + "/bz"]));
  Var r = t.sigmoid(t.add_rowvec(
      t.add(t.matmul(input, ctx[prefix + "/wxr"]), t.matmul(hidden, ctx[prefix + "/whr"])),
      ctx[prefix + "/br"]));
  Var cand = t.tanh_act(t.add_rowvec(
      t.add(t.matmul(input, ctx[prefix + "/wxc"]),
            t.matmul(t.mul(r, hidden), ctx[prefix + "/whc"])),
      ctx[prefix + "/bc"]));
  // h' = z*h + (1-z)*cand: update gate at 1 keeps the hidden state.
  return t.add(t.mul(z, hidden), t.mul(t.affine(z, -1.0, 1.0), cand));
}

namespace {

MlpSpec head_mlp_spec(const AttentionSpec& spec) {
  // W_q, W_k, W_v: one hidden layer of d_att ReLU units, then linear d_att.
  MlpSpec m;
  m.input_dim = spec.input_dim;
  m.widths = {spec.d_att, spec.d_att};
  m.acts = {Activation::kRelu, Activation::kLinear};
  return m;
}

}  // namespace

void init_attention(ParameterStore& store, const std::string& prefix,
                    const AttentionSpec& spec, RngStream& rng) {
  const MlpSpec head = head_mlp_spec(spec);
  for (int c = 0; c < spec.heads; ++c) {
    const std::string hp = prefix + "/head" + std::to_string(c);
    init_mlp(store, hp + "/q", head, rng);
    init_mlp(store, hp + "/k", head, rng);
    init_mlp(store, hp + "/v", head, rng);
  }
}

Var attention_heads(ParamCtx& ctx, const std::string& prefix, const AttentionSpec& spec,
                    Var joint_memory) {
  Tape& t = ctx.tape();
  const MlpSpec head = head_mlp_spec(spec);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.d_att));
  Var sum{};
  for (int c = 0; c < spec.heads; ++c) {
    const std::string hp = prefix + "/head" + std::to_string(c);
    Var q = mlp_forward(ctx, hp + "/q", head, joint_memory);
    Var k = mlp_forward(ctx, hp + "/k", head, joint_memory);
    Var v = mlp_forward(ctx, hp + "/v", head, joint_memory);
    Var logits = t.affine(t.matmul(q, t.transpose(k)), scale, 0.0);
    Var weights = t.softmax_rows(logits);
    Var out = t.matmul(weights, v);
    sum = (c == 0) ? out : t.add(sum, out);
  }
  return sum;
}

void init_rec_embed(ParameterStore& store, const std::string& prefix,
                    const RecEmbedSpec& spec, RngStream& rng) {
  init_attention(store, prefix + "/attn", spec.attention, rng);
  MlpSpec post;
  post.input_dim = spec.attention.d_att;
  post.widths.assign(spec.mlp_layers, spec.mlp_units);
  post.acts.assign(spec.mlp_layers, Activation::kRelu);
  init_mlp(store, prefix + "/post", post, rng);
}

Var rec_embed(ParamCtx& ctx, const std::string& prefix, const RecEmbedSpec& spec,
              Var joint_memory) {
  Tape& t = ctx.tape();
  Var att = attention_heads(ctx, prefix + "/attn", spec.attention, joint_memory);
  MlpSpec post;
  post.input_dim = spec.attention.d_att;
  post.widths.assign(spec.mlp_layers, spec.mlp_units);
  post.acts.assign(spec.mlp_layers, Activation::kRelu);
  Var rows = mlp_forward(ctx, prefix + "/post", post, att);
  return t.mean_rows(rows);
}

void init_mixer(ParameterStore& store, const std::string& prefix, const MixerSpec& spec,
                RngStream& rng) {
  const int n = spec.num_agents, e = spec.embed, dc = spec.cond_dim;
  store.create(prefix + "/hw1/w", dc, n * e, dc, rng);
  store.create(prefix + "/hw1/b", 1, n * e, dc, rng);
  store.create(prefix + "/hb1/w", dc, e, dc, rng);
  store.create(prefix + "/hb1/b", 1, e, dc, rng);
  store.create(prefix + "/hw2/w", dc, e, dc, rng);
  store.create(prefix + "/hw2/b", 1, e, dc, rng);
  // Final bias comes from a small two-layer hypernetwork.
  store.create(prefix + "/hb2/w0", dc, e, dc, rng);
  store.create(prefix + "/hb2/b0", 1, e, dc, rng);
  store.create(prefix + "/hb2/w1", e, 1, e, rng);
  store.create(prefix + "/hb2/b1", 1, 1, e, rng);
}

Var qmix_mix(ParamCtx& ctx, const std::string& prefix, const MixerSpec& spec,
             Var utilities, Var conditioner) {
  Tape& t = ctx.tape();
  const Tensor& u = t.val(utilities);
  const Tensor& c = t.val(conditioner);
  if (u.rows() != 1 || u.cols() != spec.num_agents)
    throw std::invalid_argument("qmix_mix: utilities must be [1, N], got " + u.shape_str());
  if (c.rows() != 1 || c.cols() != spec.cond_dim)
    throw std::invalid_argument("qmix_mix: conditioner must be [1, " +
                                std::to_string(spec.cond_dim) + "], got " + c.shape_str());
  const int n = spec.num_agents, e = spec.embed;
  Var w1 = t.reshape(
      t.abs_val(t.add_rowvec(t.matmul(conditioner, ctx[prefix + "/hw1/w"]),
                             ctx[prefix + "/hw1/b"])),
      n, e);
  Var b1 = t.add_rowvec(t.matmul(conditioner, ctx[prefix + "/hb1/w"]), ctx[prefix + "/hb1/b"]);
  Var hidden = t.elu(t.add(t.matmul(utilities, w1), b1));
  Var w2 = t.reshape(
      t.abs_val(t.add_rowvec(t.matmul(conditioner, ctx[prefix + "/hw2/w"]),
                             ctx[prefix + "/hw2/b"])),
      e, 1);
  Var b2 = t.add_rowvec(
      t.matmul(t.relu(t.add_rowvec(t.matmul(conditioner, ctx[prefix + "/hb2/w0"]),
                                   ctx[prefix + "/hb2/b0"])),
               ctx[prefix + "/hb2/w1"]),
      ctx[prefix + "/hb2/b1"]);
  return t.add(t.matmul(hidden, w2), b2);
}

}  // namespace aerial
