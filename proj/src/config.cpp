#include "aerial/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "aerial/metrics.hpp"

namespace aerial {

double RunConfig::resolved_discount() const {
  if (discount >= 0.0) return discount;
  return env_id == "messybattle" ? 0.99 : 1.0;
}

std::string RunConfig::resolved_run_id() const {
  if (!run_id.empty()) return run_id;
  std::ostringstream out;
  out << command << '-' << env_id << '-' << algo;
  if (phi > 0.0 || k_init > 0) out << "-phi" << format_double(phi) << "-k" << k_init;
  return out.str();
}

MessyConfig RunConfig::messy() const {
  MessyConfig m;
  m.phi = phi;
  m.k_init = k_init;
  m.per_scalar = per_scalar_negation;
  return m;
}

void RunConfig::validate() const {
  if (env_id != "dectiger" && env_id != "messybattle")
    throw ConfigError("config: unknown env '" + env_id + "'");
  if (env_variant != "reset" && env_variant != "terminate")
    throw ConfigError("config: unknown env_variant '" + env_variant + "'");
  if (phi < 0.0 || phi >= 1.0) throw ConfigError("config: phi out of range [0, 1)");
  for (double p : phi_list)
    if (p < 0.0 || p >= 1.0) throw ConfigError("config: phi_list entry out of range [0, 1)");
  if (k_init < 0) throw ConfigError("config: k_init must be >= 0");
  for (int k : k_list)
    if (k < 0) throw ConfigError("config: k_list entry must be >= 0");
  if (horizon < 1) throw ConfigError("config: horizon must be >= 1");
  if ((command == "train" || command == "eval" || command == "sweep") && seeds.empty())
    throw ConfigError("config: seed list must not be empty");
  if (method != "maa-star" && method != "brute-force")
    throw ConfigError("config: unknown method '" + method + "'");
  if (episodes < 1) throw ConfigError("config: episodes must be >= 1");
  if (steps < 1) throw ConfigError("config: steps must be >= 1");
  if (workers < 0) throw ConfigError("config: workers must be >= 0");
  try {
    battle.validate();
    if (command == "train" || command == "sweep") train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

namespace {

long long parse_int_field(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
  return v;
}

double parse_double_field(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
  return v;
}

bool parse_bool_field(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError("config: key '" + key + "' expects 0/1, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto str = [](std::string RunConfig::*field) {
      return [field](RunConfig& c, const std::string&, const std::string& v) { c.*field = v; };
    };
    auto intf = [](auto field, long long lo, long long hi) {
      return [field, lo, hi](RunConfig& c, const std::string& k, const std::string& v) {
        const long long x = parse_int_field(k, v);
        if (x < lo || x > hi)
          throw ConfigError("config: key '" + k + "' out of range [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
        c.*field = static_cast<std::remove_reference_t<decltype(c.*field)>>(x);
      };
    };
    t["command"] = str(&RunConfig::command);
    t["env"] = str(&RunConfig::env_id);
    t["env_variant"] = str(&RunConfig::env_variant);
    t["algo"] = str(&RunConfig::algo);
    t["algos"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.algos = split_list(v);
    };
    t["horizon"] = intf(&RunConfig::horizon, 1, 16);
    t["discount"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.discount = parse_double_field(k, v);
      if (c.discount < 0.0 || c.discount > 1.0)
        throw ConfigError("config: key 'discount' out of range [0, 1]");
    };
    t["phi"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.phi = parse_double_field(k, v);
      if (c.phi < 0.0 || c.phi >= 1.0)
        throw ConfigError("config: key 'phi' out of range [0, 1)");
    };
    t["k_init"] = intf(&RunConfig::k_init, 0, 1000000);
    t["per_scalar_negation"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.per_scalar_negation = parse_bool_field(k, v);
    };
    t["phi_list"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.phi_list.clear();
      for (const std::string& item : split_list(v)) {
        const double p = parse_double_field(k, item);
        if (p < 0.0 || p >= 1.0)
          throw ConfigError("config: key 'phi_list' entry out of range [0, 1)");
        c.phi_list.push_back(p);
      }
    };
    t["k_list"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.k_list.clear();
      for (const std::string& item : split_list(v)) {
        const long long x = parse_int_field(k, item);
        if (x < 0) throw ConfigError("config: key 'k_list' entry must be >= 0");
        c.k_list.push_back(static_cast<int>(x));
      }
    };
    t["seeds"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.seeds.clear();
      for (const std::string& item : split_list(v))
        c.seeds.push_back(static_cast<std::uint64_t>(parse_int_field(k, item)));
    };
    t["out"] = str(&RunConfig::out_dir);
    t["method"] = str(&RunConfig::method);
    t["run_id"] = str(&RunConfig::run_id);
    t["checkpoint"] = str(&RunConfig::checkpoint);
    t["episodes"] = intf(&RunConfig::episodes, 1, 100000000);
    t["steps"] = intf(&RunConfig::steps, 1, 100000);
    t["include_negation"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.include_negation = parse_bool_field(k, v);
    };
    t["workers"] = intf(&RunConfig::workers, 0, 4096);
    t["tool_version"] = [](RunConfig&, const std::string&, const std::string&) {
      // manifests carry the emitting tool's version; accepted on reload
    };

    auto train_ll = [](long long TrainConfig::*field, long long lo) {
      return [field, lo](RunConfig& c, const std::string& k, const std::string& v) {
        const long long x = parse_int_field(k, v);
        if (x < lo) throw ConfigError("config: key '" + k + "' must be >= " + std::to_string(lo));
        c.train.*field = x;
      };
    };
    auto train_int = [](int TrainConfig::*field, int lo) {
      return [field, lo](RunConfig& c, const std::string& k, const std::string& v) {
        const long long x = parse_int_field(k, v);
        if (x < lo) throw ConfigError("config: key '" + k + "' must be >= " + std::to_string(lo));
        c.train.*field = static_cast<int>(x);
      };
    };
    auto train_dbl = [](double TrainConfig::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.train.*field = parse_double_field(k, v);
      };
    };
    t["total_env_steps"] = train_ll(&TrainConfig::total_env_steps, 0);
    t["buffer_capacity"] = train_int(&TrainConfig::buffer_capacity, 1);
    t["batch_size"] = train_int(&TrainConfig::batch_size, 1);
    t["target_update_interval"] = train_int(&TrainConfig::target_update_interval, 1);
    t["eps_start"] = train_dbl(&TrainConfig::eps_start);
    t["eps_end"] = train_dbl(&TrainConfig::eps_end);
    t["eps_anneal_steps"] = train_ll(&TrainConfig::eps_anneal_steps, 1);
    t["lr"] = train_dbl(&TrainConfig::lr);
    t["eval_interval"] = train_ll(&TrainConfig::eval_interval, 1);
    t["eval_episodes"] = train_int(&TrainConfig::eval_episodes, 1);
    t["train_every_episodes"] = train_int(&TrainConfig::train_every_episodes, 1);
    t["double_q"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.double_q = parse_bool_field(k, v);
    };

    auto battle_int = [](int MessyBattleConfig::*field, int lo, int hi) {
      return [field, lo, hi](RunConfig& c, const std::string& k, const std::string& v) {
        const long long x = parse_int_field(k, v);
        if (x < lo || x > hi)
          throw ConfigError("config: key '" + k + "' out of range [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
        c.battle.*field = static_cast<int>(x);
      };
    };
    t["grid_width"] = battle_int(&MessyBattleConfig::grid_width, 1, 64);
    t["grid_height"] = battle_int(&MessyBattleConfig::grid_height, 1, 64);
    t["num_allies"] = battle_int(&MessyBattleConfig::num_allies, 1, 32);
    t["num_enemies"] = battle_int(&MessyBattleConfig::num_enemies, 1, 32);
    t["unit_health"] = battle_int(&MessyBattleConfig::unit_health, 1, 1000);
    t["attack_damage"] = battle_int(&MessyBattleConfig::attack_damage, 1, 1000);
    t["attack_range"] = battle_int(&MessyBattleConfig::attack_range, 0, 64);
    t["sight_range"] = battle_int(&MessyBattleConfig::sight_range, 0, 64);
    t["enemy_policy"] = battle_int(&MessyBattleConfig::enemy_policy, 0, 0);
    t["max_steps"] = battle_int(&MessyBattleConfig::max_steps, 1, 100000);
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

void apply_config_kv(RunConfig& config, const std::string& key, const std::string& value,
                     const std::string& source) {
  const auto& table = schema();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError(source + ": unknown key '" + key + "'");
  it->second(config, key, value);
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    auto [it, inserted] = seen.emplace(key, line_no);
    if (!inserted)
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                        "' (first at line " + std::to_string(it->second) + ")");
    try {
      apply_config_kv(config, key, value, source);
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      const std::string prefix = "config: ";
      if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
      const std::string src_prefix = source + ": ";
      if (msg.rfind(src_prefix, 0) == 0) msg = msg.substr(src_prefix.size());
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
    }
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig config;
  apply_config_text(config, buf.str(), path);
  return config;
}

std::string manifest_text(const RunConfig& config) {
  std::ostringstream out;
  out << "# aerial run manifest (reloadable as --config)\n";
  out << "tool_version = " << kToolVersion << "\n";
  out << "command = " << config.command << "\n";
  out << "env = " << config.env_id << "\n";
  out << "env_variant = " << config.env_variant << "\n";
  out << "algo = " << config.algo << "\n";
  if (!config.algos.empty()) {
    out << "algos = ";
    for (size_t i = 0; i < config.algos.size(); ++i)
      out << (i ? "," : "") << config.algos[i];
    out << "\n";
  }
  out << "horizon = " << config.horizon << "\n";
  out << "discount = " << format_double(config.resolved_discount()) << "\n";
  out << "phi = " << format_double(config.phi) << "\n";
  out << "k_init = " << config.k_init << "\n";
  out << "per_scalar_negation = " << (config.per_scalar_negation ? 1 : 0) << "\n";
  if (!config.phi_list.empty()) {
    out << "phi_list = ";
    for (size_t i = 0; i < config.phi_list.size(); ++i)
      out << (i ? "," : "") << format_double(config.phi_list[i]);
    out << "\n";
  }
  if (!config.k_list.empty()) {
    out << "k_list = ";
    for (size_t i = 0; i < config.k_list.size(); ++i) out << (i ? "," : "") << config.k_list[i];
    out << "\n";
  }
  out << "seeds = ";
  for (size_t i = 0; i < config.seeds.size(); ++i) out << (i ? "," : "") << config.seeds[i];
  out << "\n";
  out << "out = " << config.out_dir << "\n";
  out << "method = " << config.method << "\n";
  out << "run_id = " << config.resolved_run_id() << "\n";
  if (!config.checkpoint.empty()) out << "checkpoint = " << config.checkpoint << "\n";
  out << "episodes = " << config.episodes << "\n";
  out << "steps = " << config.steps << "\n";
  out << "include_negation = " << (config.include_negation ? 1 : 0) << "\n";
  out << "workers = " << config.workers << "\n";
  out << "total_env_steps = " << config.train.total_env_steps << "\n";
  out << "buffer_capacity = " << config.train.buffer_capacity << "\n";
  out << "batch_size = " << config.train.batch_size << "\n";
  out << "target_update_interval = " << config.train.target_update_interval << "\n";
  out << "eps_start = " << format_double(config.train.eps_start) << "\n";
  out << "eps_end = " << format_double(config.train.eps_end) << "\n";
  out << "eps_anneal_steps = " << config.train.eps_anneal_steps << "\n";
  out << "lr = " << format_double(config.train.lr) << "\n";
  out << "eval_interval = " << config.train.eval_interval << "\n";
  out << "eval_episodes = " << config.train.eval_episodes << "\n";
  out << "train_every_episodes = " << config.train.train_every_episodes << "\n";
  out << "double_q = " << (config.train.double_q ? 1 : 0) << "\n";
  if (config.env_id == "messybattle") {
    out << "grid_width = " << config.battle.grid_width << "\n";
    out << "grid_height = " << config.battle.grid_height << "\n";
    out << "num_allies = " << config.battle.num_allies << "\n";
    out << "num_enemies = " << config.battle.num_enemies << "\n";
    out << "unit_health = " << config.battle.unit_health << "\n";
    out << "attack_damage = " << config.battle.attack_damage << "\n";
    out << "attack_range = " << config.battle.attack_range << "\n";
    out << "sight_range = " << config.battle.sight_range << "\n";
    out << "enemy_policy = " << config.battle.enemy_policy << "\n";
    out << "max_steps = " << config.battle.max_steps << "\n";
  }
  return out.str();
}

void write_manifest(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << manifest_text(config);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace aerial
