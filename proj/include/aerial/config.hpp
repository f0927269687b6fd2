#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "aerial/battle.hpp"
#include "aerial/messy.hpp"
#include "aerial/train.hpp"

namespace aerial {

/// Configuration or usage problem (maps to exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kToolVersion = "aerial 0.1.0";

/// Fully resolved run configuration. The same key-value schema serves config
/// files, scenario files, and emitted run manifests, so a manifest is itself
/// a valid --config input that reproduces the run.
struct RunConfig {
  std::string command = "train";
  std::string env_id = "dectiger";        // dectiger | messybattle
  std::string env_variant = "reset";      // dectiger post-open dynamics
  std::string algo = "aerial";
  std::vector<std::string> algos;         // sweep cells; defaults to {algo}
  int horizon = 4;                        // dectiger horizon
  double discount = -1.0;                 // <0: per-env default (1.0 / 0.99)
  double phi = 0.0;
  int k_init = 0;
  bool per_scalar_negation = false;
  std::vector<double> phi_list;
  std::vector<int> k_list;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "out";
  std::string method = "maa-star";        // solve: maa-star | brute-force
  std::string run_id;
  std::string checkpoint;                 // eval input
  TrainConfig train;
  int episodes = 1000;                    // eval / diag-pca rollouts
  int steps = 5;                          // diag-pca steps per episode
  bool include_negation = false;          // diag-pca collects with phi
  int workers = 0;                        // 0 = hardware concurrency
  MessyBattleConfig battle;

  double resolved_discount() const;
  std::string resolved_run_id() const;
  MessyConfig messy() const;
  void validate() const;
};

/// Parses the documented key = value schema. Unknown and duplicate keys are
/// errors (with line numbers), values are range-checked, remaining fields
/// keep their defaults.
RunConfig load_config(const std::string& path);

/// Applies the same schema from an in-memory document (used for overrides
/// and tests). `source` names the document in error messages.
void apply_config_text(RunConfig& config, const std::string& text, const std::string& source);

/// Applies one key/value pair (CLI flag overrides).
void apply_config_kv(RunConfig& config, const std::string& key, const std::string& value,
                     const std::string& source);

/// Serializes every resolved field in fixed order, with the tool version.
std::string manifest_text(const RunConfig& config);
void write_manifest(const RunConfig& config, const std::string& path);

}  // namespace aerial
