#include "aerial/battle.hpp"

#include <cmath>
#include <stdexcept>

namespace aerial {

void MessyBattleConfig::validate() const {
  if (grid_width < 1 || grid_height < 1) throw std::invalid_argument("battle: empty grid");
  if (num_allies < 1 || num_enemies < 1) throw std::invalid_argument("battle: need units on both sides");
  if (unit_health < 1 || attack_damage < 1) throw std::invalid_argument("battle: health/damage must be positive");
  if (sight_range < attack_range) throw std::invalid_argument("battle: sight_range must be >= attack_range");
  if (max_steps < 1) throw std::invalid_argument("battle: max_steps must be >= 1");
  if (enemy_policy != 0) throw std::invalid_argument("battle: unknown enemy_policy id");
  if (static_cast<long long>(grid_width) * grid_height < num_allies + num_enemies)
    throw std::invalid_argument("battle: grid too small for all units");
}

MessyBattleEnv::MessyBattleEnv(const MessyBattleConfig& config, double discount)
    : cfg_(config), discount_(discount) {
  cfg_.validate();
  RngStream dummy(0);
  reset(dummy);
}

int MessyBattleEnv::obs_dim() const {
  return 3 + (cfg_.num_allies - 1 + cfg_.num_enemies) * 4;
}

int MessyBattleEnv::state_dim() const { return (cfg_.num_allies + cfg_.num_enemies) * 3; }

std::vector<std::vector<double>> MessyBattleEnv::reset(RngStream& rng) {
  (void)rng;  // spawn formation is fixed; stochasticity comes from the messy wrapper
  allies_.assign(cfg_.num_allies, Unit{});
  enemies_.assign(cfg_.num_enemies, Unit{});
  auto place = [&](std::vector<Unit>& units, int col, int dir) {
    int x = col, y = 0;
    for (Unit& u : units) {
      u.x = x;
      u.y = y;
      u.hp = cfg_.unit_health;
      if (++y == cfg_.grid_height) {
        y = 0;
        x += dir;
      }
    }
  };
  place(allies_, 0, 1);
  place(enemies_, cfg_.grid_width - 1, -1);
  return observe_all();
}

bool MessyBattleEnv::in_range(const Unit& a, const Unit& b, int range) const {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) <= range;
}

bool MessyBattleEnv::cell_free(int x, int y, const Unit* except) const {
  if (x < 0 || x >= cfg_.grid_width || y < 0 || y >= cfg_.grid_height) return false;
  for (const Unit& u : allies_)
    if (u.alive() && &u != except && u.x == x && u.y == y) return false;
  for (const Unit& u : enemies_)
    if (u.alive() && &u != except && u.x == x && u.y == y) return false;
  return true;
}

void MessyBattleEnv::move_unit(Unit& u, int dir) {
  static const int dx[] = {0, 0, 0, -1, 1};  // noop N S W E
  static const int dy[] = {0, -1, 1, 0, 0};
  const int nx = u.x + dx[dir], ny = u.y + dy[dir];
  if (cell_free(nx, ny, &u)) {
    u.x = nx;
    u.y = ny;
  }
}

EnvStep MessyBattleEnv::step(const std::vector<int>& actions, RngStream& rng) {
  (void)rng;  // combat resolution is deterministic
  if (terminal()) throw std::runtime_error("episode ended");
  if (static_cast<int>(actions.size()) != cfg_.num_allies)
    throw std::invalid_argument("battle: one action per ally required");

  int dealt = 0, taken = 0;
  // Ally attacks resolve first, in agent order.
  for (int i = 0; i < cfg_.num_allies; ++i) {
    if (!allies_[i].alive()) continue;
    const int a = actions[i];
    if (a < 5) continue;
    const int j = a - 5;
    if (j >= cfg_.num_enemies) throw std::invalid_argument("battle: action out of range");
    Unit& target = enemies_[j];
    if (!target.alive() || !in_range(allies_[i], target, cfg_.attack_range)) continue;
    const int dmg = std::min(cfg_.attack_damage, target.hp);
    target.hp -= dmg;
    dealt += dmg;
  }
  // Enemy script, then ally movement.
  {
    for (Unit& e : enemies_) {
      if (!e.alive()) continue;
      int target = -1;
      for (int i = 0; i < cfg_.num_allies; ++i) {
        if (!allies_[i].alive() || !in_range(e, allies_[i], cfg_.attack_range)) continue;
        if (target < 0 || allies_[i].hp < allies_[target].hp) target = i;
      }
      if (target >= 0) {
        const int dmg = std::min(cfg_.attack_damage, allies_[target].hp);
        allies_[target].hp -= dmg;
        taken += dmg;
      } else {
        // Close in on the nearest living ally (Manhattan, x before y).
        int nearest = -1, best = 1 << 30;
        for (int i = 0; i < cfg_.num_allies; ++i) {
          if (!allies_[i].alive()) continue;
          const int d = std::abs(e.x - allies_[i].x) + std::abs(e.y - allies_[i].y);
          if (d < best) {
            best = d;
            nearest = i;
          }
        }
        if (nearest >= 0) {
          const Unit& t = allies_[nearest];
          if (e.x != t.x)
            move_unit(e, e.x > t.x ? 3 : 4);
          else if (e.y != t.y)
            move_unit(e, e.y > t.y ? 1 : 2);
        }
      }
    }
  }
  for (int i = 0; i < cfg_.num_allies; ++i) {
    if (!allies_[i].alive()) continue;
    const int a = actions[i];
    if (a >= 1 && a <= 4) move_unit(allies_[i], a);
  }

  EnvStep out;
  const double total_enemy_hp = static_cast<double>(cfg_.num_enemies) * cfg_.unit_health;
  out.reward = (dealt - taken) / total_enemy_hp;
  if (won()) out.reward += 1.0;
  out.terminal = terminal();
  out.obs = observe_all();
  return out;
}

bool MessyBattleEnv::terminal() const {
  bool any_ally = false, any_enemy = false;
  for (const Unit& u : allies_) any_ally |= u.alive();
  for (const Unit& u : enemies_) any_enemy |= u.alive();
  return !any_ally || !any_enemy;
}

bool MessyBattleEnv::won() const {
  for (const Unit& u : enemies_)
    if (u.alive()) return false;
  return true;
}

std::vector<std::uint8_t> MessyBattleEnv::action_mask(int agent) const {
  std::vector<std::uint8_t> mask(num_actions(), 0);
  mask[0] = 1;
  const Unit& self = allies_[agent];
  if (!self.alive()) return mask;  // downed units can only noop
  for (int d = 1; d <= 4; ++d) mask[d] = 1;
  for (int j = 0; j < cfg_.num_enemies; ++j)
    if (enemies_[j].alive() && in_range(self, enemies_[j], cfg_.attack_range)) mask[5 + j] = 1;
  return mask;
}

std::vector<std::vector<double>> MessyBattleEnv::observe_all() const {
  std::vector<std::vector<double>> obs;
  obs.reserve(cfg_.num_allies);
  for (int i = 0; i < cfg_.num_allies; ++i) obs.push_back(observe(i));
  return obs;
}

std::vector<double> MessyBattleEnv::observe(int agent) const {
  std::vector<double> o(obs_dim(), 0.0);
  const Unit& self = allies_[agent];
  if (!self.alive()) return o;
  const double wx = std::max(cfg_.grid_width - 1, 1);
  const double wy = std::max(cfg_.grid_height - 1, 1);
  o[0] = static_cast<double>(self.hp) / cfg_.unit_health;
  o[1] = self.x / wx;
  o[2] = self.y / wy;
  int slot = 0;
  auto write_unit = [&](const Unit& u) {
    const int base = 3 + slot * 4;
    ++slot;
    if (!u.alive() || !in_range(self, u, cfg_.sight_range)) return;
    o[base + 0] = (u.x - self.x) / wx;
    o[base + 1] = (u.y - self.y) / wy;
    o[base + 2] = static_cast<double>(u.hp) / cfg_.unit_health;
    o[base + 3] = 1.0;
  };
  for (int i = 0; i < cfg_.num_allies; ++i)
    if (i != agent) write_unit(allies_[i]);
  for (int j = 0; j < cfg_.num_enemies; ++j) write_unit(enemies_[j]);
  return o;
}

std::vector<double> MessyBattleEnv::state_features_impl() const {
  std::vector<double> f(state_dim(), 0.0);
  const double wx = std::max(cfg_.grid_width - 1, 1);
  const double wy = std::max(cfg_.grid_height - 1, 1);
  int slot = 0;
  auto write_unit = [&](const Unit& u) {
    f[slot * 3 + 0] = u.x / wx;
    f[slot * 3 + 1] = u.y / wy;
    f[slot * 3 + 2] = static_cast<double>(u.hp) / cfg_.unit_health;
    ++slot;
  };
  for (const Unit& u : allies_) write_unit(u);
  for (const Unit& u : enemies_) write_unit(u);
  return f;
}

std::unique_ptr<Environment> MessyBattleEnv::clone() const {
  return std::make_unique<MessyBattleEnv>(*this);
}

}  // namespace aerial
