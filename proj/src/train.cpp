#include "aerial/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aerial {

VariantKind variant_from_string(const std::string& name) {
  if (name == "aerial") return VariantKind::kAerial;
  if (name == "no_attention") return VariantKind::kNoAttention;
  if (name == "raw_history") return VariantKind::kRawHistory;
  if (name == "state_based") return VariantKind::kStateBased;
  throw std::invalid_argument("unknown variant: " + name);
}

std::string to_string(VariantKind v) {
  switch (v) {
    case VariantKind::kAerial: return "aerial";
    case VariantKind::kNoAttention: return "no_attention";
    case VariantKind::kRawHistory: return "raw_history";
    case VariantKind::kStateBased: return "state_based";
  }
  return "?";
}

bool variant_reads_state(VariantKind v) {
  return v == VariantKind::kRawHistory || v == VariantKind::kStateBased;
}

int NetDims::cond_dim(VariantKind v) const {
  switch (v) {
    case VariantKind::kAerial: return rec_mlp_units;
    case VariantKind::kNoAttention: return num_agents * gru_units;
    case VariantKind::kRawHistory: return raw_history_dim();
    case VariantKind::kStateBased: return state_dim;
  }
  return 0;
}

NetDims dims_for(const Environment& env) {
  NetDims d;
  d.num_agents = env.num_agents();
  d.obs_dim = env.obs_dim();
  d.num_actions = env.num_actions();
  d.state_dim = env.state_dim();
  d.max_steps = env.max_steps();
  return d;
}

namespace {

MlpSpec encoder_spec(const NetDims& d) {
  MlpSpec m;
  m.input_dim = d.agent_input_dim();
  m.widths = {d.gru_units};
  m.acts = {Activation::kRelu};
  return m;
}

MlpSpec head_spec(const NetDims& d) {
  MlpSpec m;
  m.input_dim = d.gru_units;
  m.widths = {d.num_actions};
  m.acts = {Activation::kLinear};
  return m;
}

GruSpec gru_spec(const NetDims& d) { return GruSpec{d.gru_units, d.gru_units}; }

RecEmbedSpec rec_spec(const NetDims& d) {
  RecEmbedSpec r;
  r.attention.input_dim = d.gru_units;
  r.attention.heads = d.attn_heads;
  r.attention.d_att = d.d_att;
  r.mlp_layers = d.rec_mlp_layers;
  r.mlp_units = d.rec_mlp_units;
  return r;
}

MixerSpec mixer_spec(const NetDims& d, VariantKind v) {
  MixerSpec m;
  m.num_agents = d.num_agents;
  m.cond_dim = d.cond_dim(v);
  m.embed = d.mixer_embed;
  return m;
}

}  // namespace

void init_networks(ParameterStore& store, const NetDims& dims, VariantKind variant,
                   RngStream& rng) {
  init_mlp(store, "agent/enc", encoder_spec(dims), rng);
  init_gru(store, "agent/gru", gru_spec(dims), rng);
  init_mlp(store, "agent/head", head_spec(dims), rng);
  if (variant == VariantKind::kAerial) init_rec_embed(store, "rec", rec_spec(dims), rng);
  init_mixer(store, "mixer", mixer_spec(dims, variant), rng);
}

std::vector<int> select_actions(const std::vector<std::vector<double>>& utilities,
                                const std::vector<std::vector<std::uint8_t>>& masks,
                                double epsilon, RngStream& rng) {
  const int n = static_cast<int>(utilities.size());
  std::vector<int> actions(n);
  for (int i = 0; i < n; ++i) {
    const auto& q = utilities[i];
    const auto& mask = masks[i];
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
      int avail = 0;
      for (std::uint8_t m : mask) avail += m;
      int pick = rng.uniform_int(std::max(avail, 1));
      int chosen = 0;
      for (size_t a = 0; a < mask.size(); ++a) {
        if (!mask[a]) continue;
        if (pick-- == 0) {
          chosen = static_cast<int>(a);
          break;
        }
      }
      actions[i] = chosen;
      continue;
    }
    int best = -1;
    double best_q = -std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < q.size(); ++a) {
      if (!mask[a]) continue;
      if (q[a] > best_q) {
        best_q = q[a];
        best = static_cast<int>(a);
      }
    }
    actions[i] = best < 0 ? 0 : best;
  }
  return actions;
}

// ---------------------------------------------------------------------------
// Forward evaluation helpers.

namespace {

Tensor step_input(const NetDims& d, const std::vector<std::vector<double>>& obs,
                  const std::vector<int>& prev_actions) {
  Tensor in(d.num_agents, d.agent_input_dim());
  for (int i = 0; i < d.num_agents; ++i) {
    int col = 0;
    for (int k = 0; k < d.obs_dim; ++k) in.at(i, col++) = obs[i][k];
    for (int a = 0; a < d.num_actions; ++a)
      in.at(i, col++) = (prev_actions[i] == a) ? 1.0 : 0.0;
    for (int k = 0; k < d.num_agents; ++k) in.at(i, col++) = (k == i) ? 1.0 : 0.0;
  }
  return in;
}

struct EpisodeForward {
  std::vector<Var> hidden;     // [t] -> [N, units] after consuming obs[t]
  std::vector<Var> utilities;  // [t] -> [N, A]
};

EpisodeForward unroll_episode(ParamCtx& ctx, const NetDims& d, const EpisodeTrace& trace) {
  Tape& tape = ctx.tape();
  EpisodeForward out;
  Var h = tape.constant(Tensor(d.num_agents, d.gru_units));
  const std::vector<int> none(d.num_agents, -1);
  for (int t = 0; t < trace.length(); ++t) {
    const std::vector<int>& prev = (t == 0) ? none : trace.actions[t - 1];
    Var x = tape.constant(step_input(d, trace.obs[t], prev));
    Var enc = mlp_forward(ctx, "agent/enc", encoder_spec(d), x);
    h = gru_step(ctx, "agent/gru", gru_spec(d), enc, h);
    out.hidden.push_back(h);
    out.utilities.push_back(mlp_forward(ctx, "agent/head", head_spec(d), h));
  }
  return out;
}

Tensor raw_history_vector(const NetDims& d, const EpisodeTrace& trace, int t) {
  Tensor cond(1, d.raw_history_dim());
  const int slot_w = d.obs_dim + d.num_actions;
  for (int i = 0; i < d.num_agents; ++i) {
    for (int u = 0; u <= t; ++u) {
      const int base = (i * d.max_steps + u) * slot_w;
      for (int k = 0; k < d.obs_dim; ++k) cond.at(0, base + k) = trace.obs[u][i][k];
      if (u < t) cond.at(0, base + d.obs_dim + trace.actions[u][i]) = 1.0;
    }
  }
  const int state_base = d.num_agents * d.max_steps * slot_w;
  for (int k = 0; k < d.state_dim; ++k) cond.at(0, state_base + k) = trace.states[t][k];
  return cond;
}

Var conditioner_for(ParamCtx& ctx, const NetDims& d, VariantKind v, const EpisodeTrace& trace,
                    int t, Var hidden) {
  Tape& tape = ctx.tape();
  switch (v) {
    case VariantKind::kAerial:
      return rec_embed(ctx, "rec", rec_spec(d), tape.detach(hidden));
    case VariantKind::kNoAttention:
      return tape.reshape(tape.detach(hidden), 1, d.num_agents * d.gru_units);
    case VariantKind::kRawHistory:
      return tape.constant(raw_history_vector(d, trace, t));
    case VariantKind::kStateBased: {
      Tensor s(1, d.state_dim);
      for (int k = 0; k < d.state_dim; ++k) s.at(0, k) = trace.states[t][k];
      return tape.constant(s);
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<int> masked_argmax_rows(const Tensor& q,
                                    const std::vector<std::vector<std::uint8_t>>& masks) {
  std::vector<int> out(q.rows());
  for (int i = 0; i < q.rows(); ++i) {
    int best = -1;
    double best_q = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.cols(); ++a) {
      if (!masks[i][a]) continue;
      if (q.at(i, a) > best_q) {
        best_q = q.at(i, a);
        best = a;
      }
    }
    out[i] = best < 0 ? 0 : best;
  }
  return out;
}

}  // namespace

AgentRuntime::AgentRuntime(const ParameterStore& store, const NetDims& dims)
    : store_(&store), dims_(dims), hidden_(dims.num_agents, dims.gru_units) {}

void AgentRuntime::begin_episode() { hidden_ = Tensor(dims_.num_agents, dims_.gru_units); }

std::vector<std::vector<double>> AgentRuntime::utilities(
    const std::vector<std::vector<double>>& obs, const std::vector<int>& prev_actions) {
  Tape tape;
  ParamCtx ctx(tape, const_cast<ParameterStore&>(*store_), /*trainable=*/false);
  Var h = tape.constant(hidden_);
  Var x = tape.constant(step_input(dims_, obs, prev_actions));
  Var enc = mlp_forward(ctx, "agent/enc", encoder_spec(dims_), x);
  Var h2 = gru_step(ctx, "agent/gru", gru_spec(dims_), enc, h);
  Var q = mlp_forward(ctx, "agent/head", head_spec(dims_), h2);
  hidden_ = tape.val(h2);
  const Tensor& qv = tape.val(q);
  std::vector<std::vector<double>> out(dims_.num_agents, std::vector<double>(dims_.num_actions));
  for (int i = 0; i < dims_.num_agents; ++i)
    for (int a = 0; a < dims_.num_actions; ++a) out[i][a] = qv.at(i, a);
  return out;
}

EpisodeTrace run_episode(Environment& env, const ParameterStore& store, const NetDims& dims,
                         VariantKind variant, double epsilon, RngStream& env_rng,
                         RngStream& action_rng, double gamma) {
  EpisodeTrace trace;
  AgentRuntime agent(store, dims);
  agent.begin_episode();
  std::vector<std::vector<double>> obs = env.reset(env_rng);
  std::vector<int> prev(dims.num_agents, -1);
  const bool needs_state = variant_reads_state(variant);
  const bool record_rec = variant == VariantKind::kAerial;

  for (int t = 0; t < env.max_steps(); ++t) {
    std::vector<std::vector<std::uint8_t>> masks(dims.num_agents);
    for (int i = 0; i < dims.num_agents; ++i) masks[i] = env.action_mask(i);
    const auto utils = agent.utilities(obs, prev);
    const std::vector<int> actions = select_actions(utils, masks, epsilon, action_rng);

    trace.obs.push_back(obs);
    trace.masks.push_back(masks);
    trace.actions.push_back(actions);
    if (needs_state) trace.states.push_back(env.state_features());
    if (record_rec) {
      Tape tape;
      ParamCtx ctx(tape, const_cast<ParameterStore&>(store), /*trainable=*/false);
      Var rec = rec_embed(ctx, "rec", rec_spec(dims), tape.constant(agent.hidden()));
      trace.embeddings.push_back(tape.val(rec).data);
    }

    EnvStep out = env.step(actions, env_rng);
    trace.rewards.push_back(out.reward);
    prev = actions;
    obs = std::move(out.obs);
    if (out.terminal) {
      trace.terminated = true;
      break;
    }
  }
  trace.won = env.won();
  trace.returns = discounted_return(trace.rewards, gamma);
  return trace;
}

double td_train_step(ParameterStore& store, const ParameterStore& target_store,
                     const NetDims& dims, VariantKind variant,
                     const std::vector<const EpisodeTrace*>& batch, double gamma, double lr,
                     bool double_q) {
  if (batch.empty()) throw std::invalid_argument("td_train_step: empty batch");
  GradMap grads;
  double sse = 0.0;
  long long steps = 0;

  for (const EpisodeTrace* ep : batch) {
    const int len = ep->length();
    if (len == 0) continue;
    Tape tape;
    ParamCtx online(tape, store, /*trainable=*/true);
    ParamCtx target(tape, const_cast<ParameterStore&>(target_store), /*trainable=*/false);

    EpisodeForward fwd = unroll_episode(online, dims, *ep);
    EpisodeForward tgt = unroll_episode(target, dims, *ep);

    // Bootstrap targets as plain numbers (no gradient through them).
    std::vector<double> y(len);
    for (int t = 0; t < len; ++t) {
      if (t == len - 1) {
        y[t] = ep->rewards[t];
        continue;
      }
      const Tensor& q_next = double_q ? tape.val(fwd.utilities[t + 1])
                                      : tape.val(tgt.utilities[t + 1]);
      const std::vector<int> greedy = masked_argmax_rows(q_next, ep->masks[t + 1]);
      Var chosen = tape.select_per_row(tgt.utilities[t + 1], greedy);
      Var cond = conditioner_for(target, dims, variant, *ep, t + 1, tgt.hidden[t + 1]);
      Var qt = qmix_mix(target, "mixer", mixer_spec(dims, variant), chosen, cond);
      y[t] = ep->rewards[t] + gamma * tape.val(qt).data[0];
    }

    Var ep_loss{};
    for (int t = 0; t < len; ++t) {
      Var chosen = tape.select_per_row(fwd.utilities[t], ep->actions[t]);
      Var cond = conditioner_for(online, dims, variant, *ep, t, fwd.hidden[t]);
      Var qtot = qmix_mix(online, "mixer", mixer_spec(dims, variant), chosen, cond);
      Var err = tape.affine(qtot, 1.0, -y[t]);
      Var sq = tape.mul(err, err);
      ep_loss = (t == 0) ? sq : tape.add(ep_loss, sq);
    }
    tape.backward(ep_loss);
    online.collect_grads(grads);
    sse += tape.val(ep_loss).data[0];
    steps += len;
  }

  if (steps == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(steps);
  for (auto& [name, g] : grads)
    for (double& x : g.data) x *= inv;
  store.rmsprop_update(grads, lr);
  return sse * inv;
}

void TrainConfig::validate() const {
  if (total_env_steps < 0) throw std::invalid_argument("train: total_env_steps must be >= 0");
  if (buffer_capacity < 1 || batch_size < 1) throw std::invalid_argument("train: buffer/batch must be positive");
  if (target_update_interval < 1) throw std::invalid_argument("train: target_update_interval must be >= 1");
  if (eps_start < eps_end || eps_end < 0.0 || eps_start > 1.0)
    throw std::invalid_argument("train: need eps_start >= eps_end >= 0");
  if (eps_anneal_steps < 1) throw std::invalid_argument("train: eps_anneal_steps must be >= 1");
  if (discount < 0.0 || discount > 1.0) throw std::invalid_argument("train: discount out of [0,1]");
  if (lr <= 0.0) throw std::invalid_argument("train: lr must be positive");
  if (eval_interval < 1) throw std::invalid_argument("train: eval_interval must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("train: eval_episodes must be >= 1");
  if (train_every_episodes < 1) throw std::invalid_argument("train: train_every_episodes must be >= 1");
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("replay buffer: capacity must be >= 1");
  store_.reserve(capacity);
}

void ReplayBuffer::push(EpisodeTrace trace) {
  if (static_cast<int>(store_.size()) < capacity_) {
    store_.push_back(std::move(trace));
  } else {
    store_[next_] = std::move(trace);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const EpisodeTrace*> ReplayBuffer::sample(int batch, RngStream& rng) const {
  if (batch > size()) throw std::invalid_argument("replay buffer: batch larger than buffer");
  std::vector<int> idx(store_.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<const EpisodeTrace*> out;
  out.reserve(batch);
  for (int k = 0; k < batch; ++k) {
    const int pick = k + rng.uniform_int(static_cast<int>(idx.size()) - k);
    std::swap(idx[k], idx[pick]);
    out.push_back(&store_[idx[k]]);
  }
  return out;
}

EvalResult evaluate(const EnvFactory& factory, const ParameterStore& store, const NetDims& dims,
                    int episodes, RngStream rng, double gamma) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::vector<double> returns, wins;
  AgentRuntime agent(store, dims);
  for (int e = 0; e < episodes; ++e) {
    std::unique_ptr<Environment> env = factory();
    RngStream ep_rng = rng.derive(e);
    agent.begin_episode();
    std::vector<std::vector<double>> obs = env->reset(ep_rng);
    std::vector<int> prev(dims.num_agents, -1);
    double ret = 0.0, disc = 1.0;
    for (int t = 0; t < env->max_steps(); ++t) {
      std::vector<std::vector<std::uint8_t>> masks(dims.num_agents);
      for (int i = 0; i < dims.num_agents; ++i) masks[i] = env->action_mask(i);
      const auto utils = agent.utilities(obs, prev);
      RngStream unused(0);
      const std::vector<int> actions = select_actions(utils, masks, 0.0, unused);
      EnvStep out = env->step(actions, ep_rng);
      ret += disc * out.reward;
      disc *= gamma;
      prev = actions;
      obs = std::move(out.obs);
      if (out.terminal) break;
    }
    returns.push_back(ret);
    wins.push_back(env->won() ? 1.0 : 0.0);
  }
  EvalResult r;
  r.mean_return = mean_of(returns);
  r.win_rate = mean_of(wins);
  r.ci_half = ci95_halfwidth(returns);
  r.episodes = episodes;
  return r;
}

EvalResult evaluate_fixed(const EnvFactory& factory, const FixedPolicy& policy, int episodes,
                          RngStream rng, double gamma) {
  std::vector<double> returns, wins;
  for (int e = 0; e < episodes; ++e) {
    std::unique_ptr<Environment> env = factory();
    RngStream ep_rng = rng.derive(e);
    std::vector<std::vector<double>> obs = env->reset(ep_rng);
    double ret = 0.0, disc = 1.0;
    for (int t = 0; t < env->max_steps(); ++t) {
      EnvStep out = env->step(policy(t, obs), ep_rng);
      ret += disc * out.reward;
      disc *= gamma;
      obs = std::move(out.obs);
      if (out.terminal) break;
    }
    returns.push_back(ret);
    wins.push_back(env->won() ? 1.0 : 0.0);
  }
  EvalResult r;
  r.mean_return = mean_of(returns);
  r.win_rate = mean_of(wins);
  r.ci_half = ci95_halfwidth(returns);
  r.episodes = episodes;
  return r;
}

TrainResult train(const EnvFactory& factory, VariantKind variant, const TrainConfig& config,
                  const std::string& run_id) {
  config.validate();
  std::unique_ptr<Environment> env = factory();
  TrainResult result;
  result.dims = dims_for(*env);

  RngStream root(config.seed);
  RngStream init_rng = root.derive(0);
  init_networks(result.store, result.dims, variant, init_rng);
  ParameterStore target = result.store;

  ReplayBuffer buffer(config.buffer_capacity);
  RngStream train_rng = root.derive(2);

  long long env_steps = 0, episodes = 0, train_steps = 0;
  long long next_eval = 0;
  int eval_index = 0;
  double last_loss = 0.0;
  double epsilon = config.eps_start;

  auto eval_row = [&]() {
    EvalResult ev = evaluate(factory, result.store, result.dims, config.eval_episodes,
                             root.derive(3).derive(eval_index++), config.discount);
    MetricsRow row;
    row.run_id = run_id;
    row.seed = config.seed;
    row.env_step = env_steps;
    row.episodes = episodes;
    row.train_loss = last_loss;
    row.epsilon = epsilon;
    row.eval_return_mean = ev.mean_return;
    row.eval_win_rate = ev.win_rate;
    row.eval_ci_halfwidth = ev.ci_half;
    result.metrics.push_back(row);
  };

  while (env_steps < config.total_env_steps) {
    if (env_steps >= next_eval) {
      eval_row();
      next_eval += config.eval_interval;
    }
    const double frac =
        std::min(1.0, static_cast<double>(env_steps) / static_cast<double>(config.eps_anneal_steps));
    epsilon = config.eps_start + frac * (config.eps_end - config.eps_start);

    RngStream ep_rng = root.derive(1).derive(static_cast<std::uint64_t>(episodes));
    RngStream env_rng = ep_rng.derive(0);
    RngStream act_rng = ep_rng.derive(1);
    EpisodeTrace trace = run_episode(*env, result.store, result.dims, variant, epsilon, env_rng,
                                     act_rng, config.discount);
    env_steps += trace.length();
    ++episodes;
    buffer.push(std::move(trace));

    if (buffer.size() >= config.batch_size && episodes % config.train_every_episodes == 0) {
      const auto batch = buffer.sample(config.batch_size, train_rng);
      last_loss = td_train_step(result.store, target, result.dims, variant, batch,
                                config.discount, config.lr, config.double_q);
      ++train_steps;
      if (train_steps % config.target_update_interval == 0)
        target.copy_values_from(result.store);
    }
  }
  if (config.total_env_steps > 0) eval_row();

  result.env_steps = env_steps;
  result.episodes = episodes;
  return result;
}

std::vector<Tensor> unroll_hidden_states(const ParameterStore& store, const NetDims& dims,
                                         const EpisodeTrace& trace) {
  Tape tape;
  ParamCtx ctx(tape, const_cast<ParameterStore&>(store), /*trainable=*/false);
  EpisodeForward fwd = unroll_episode(ctx, dims, trace);
  std::vector<Tensor> out;
  for (Var h : fwd.hidden) out.push_back(tape.val(h));
  return out;
}

std::vector<std::vector<double>> utilities_from_hidden(const ParameterStore& store,
                                                       const NetDims& dims, const Tensor& hidden) {
  Tape tape;
  ParamCtx ctx(tape, const_cast<ParameterStore&>(store), /*trainable=*/false);
  Var q = mlp_forward(ctx, "agent/head", head_spec(dims), tape.constant(hidden));
  const Tensor& qv = tape.val(q);
  std::vector<std::vector<double>> out(dims.num_agents, std::vector<double>(dims.num_actions));
  for (int i = 0; i < dims.num_agents; ++i)
    for (int a = 0; a < dims.num_actions; ++a) out[i][a] = qv.at(i, a);
  return out;
}

double qtot_eval(const ParameterStore& store, const NetDims& dims, VariantKind variant,
                 const EpisodeTrace& trace, int t, const Tensor& hidden,
                 const std::vector<int>& actions) {
  Tape tape;
  ParamCtx ctx(tape, const_cast<ParameterStore&>(store), /*trainable=*/false);
  Var h = tape.constant(hidden);
  Var q = mlp_forward(ctx, "agent/head", head_spec(dims), h);
  Var chosen = tape.select_per_row(q, actions);
  Var cond = conditioner_for(ctx, dims, variant, trace, t, h);
  Var qtot = qmix_mix(ctx, "mixer", mixer_spec(dims, variant), chosen, cond);
  return tape.val(qtot).data[0];
}

}  // namespace aerial
