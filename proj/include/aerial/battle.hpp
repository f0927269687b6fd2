#pragma once

#include <string>

#include "aerial/env.hpp"

namespace aerial {

/// Grid micro-combat scenario: N learning allies against M script-driven
/// enemies on a small grid. Enemies focus-fire the weakest visible ally and
/// otherwise close in on the nearest one.
struct MessyBattleConfig {
  int grid_width = 5;
  int grid_height = 5;
  int num_allies = 3;
  int num_enemies = 3;
  int unit_health = 10;
  int attack_damage = 2;
  int attack_range = 1;   // Chebyshev distance
  int sight_range = 2;    // Chebyshev distance, >= attack_range
  int enemy_policy = 0;   // 0 = focus-fire weakest, approach nearest
  int max_steps = 30;

  void validate() const;
};

/// Actions per ally: 0 noop, 1..4 move N/S/W/E, 5..5+M-1 attack enemy j.
/// Shared reward per step is (damage dealt - damage taken) / total enemy
/// health, plus 1.0 when the last enemy falls. Attacks out of range act as
/// noop. The episode is terminal when either team is eliminated; the step
/// limit is enforced by the episode runner.
class MessyBattleEnv : public Environment {
 public:
  explicit MessyBattleEnv(const MessyBattleConfig& config, double discount = 0.99);

  int num_agents() const override { return cfg_.num_allies; }
  int num_actions() const override { return 5 + cfg_.num_enemies; }
  int obs_dim() const override;
  int state_dim() const override;
  int max_steps() const override { return cfg_.max_steps; }
  double discount() const override { return discount_; }

  std::vector<std::vector<double>> reset(RngStream& rng) override;
  EnvStep step(const std::vector<int>& actions, RngStream& rng) override;
  bool terminal() const override;
  bool won() const override;
  std::vector<std::uint8_t> action_mask(int agent) const override;

  std::unique_ptr<Environment> clone() const override;

  const MessyBattleConfig& config() const { return cfg_; }
  int ally_health(int i) const { return allies_[i].hp; }
  int enemy_health(int j) const { return enemies_[j].hp; }

 protected:
  std::vector<double> state_features_impl() const override;

 private:
  struct Unit {
    int x = 0, y = 0, hp = 0;
    bool alive() const { return hp > 0; }
  };

  std::vector<std::vector<double>> observe_all() const;
  std::vector<double> observe(int agent) const;
  bool in_range(const Unit& a, const Unit& b, int range) const;
  void enemy_turn();
  void move_unit(Unit& u, int dir);
  bool cell_free(int x, int y, const Unit* except) const;

  MessyBattleConfig cfg_;
  double discount_;
  std::vector<Unit> allies_;
  std::vector<Unit> enemies_;
};

}  // namespace aerial
