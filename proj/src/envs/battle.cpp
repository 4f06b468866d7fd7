#include "mrgr/envs/battle.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

#include "mrgr/rng.hpp"

namespace mrgr::envs {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::move: return "move";
    case EventKind::kill_enemy: return "kill_enemy";
    case EventKind::attack_enemy: return "attack_enemy";
    case EventKind::attack_blank: return "attack_blank";
    case EventKind::attacked_or_killed: return "attacked_or_killed";
  }
  return "?";
}

double RewardUtilities::of(EventKind k) const {
  switch (k) {
    case EventKind::move: return move;
    case EventKind::kill_enemy: return kill_enemy;
    case EventKind::attack_enemy: return attack_enemy;
    case EventKind::attack_blank: return attack_blank;
    case EventKind::attacked_or_killed: return attacked_or_killed;
  }
  return 0.0;
}

double team_reward(std::span<const RewardEvent> events, const RewardUtilities& u) {
  // Count first so the sum does not depend on event order.
  std::array<std::size_t, 5> counts{};
  for (const auto& e : events) ++counts[static_cast<std::size_t>(e.kind)];
  double r = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    r += static_cast<double>(counts[k]) * u.of(static_cast<EventKind>(k));
  return r;
}

void BattleConfig::validate() const {
  if (width < 4 || height < 4) throw std::invalid_argument("battle: grid must be at least 4x4");
  if (agents == 0) throw std::invalid_argument("battle: agents must be positive");
  if (hp < 1) throw std::invalid_argument("battle: hp must be at least 1");
  if (view % 2 == 0) throw std::invalid_argument("battle: view must be odd");
  if (minimap == 0) throw std::invalid_argument("battle: minimap must be positive");
  if (max_ticks == 0) throw std::invalid_argument("battle: max_ticks must be positive");
  const std::size_t band = std::max<std::size_t>(3, width / 4);
  if (band * (height / 2) < agents || width / 2 < band + 1) {
    throw std::invalid_argument("battle: grid too small for " + std::to_string(agents) + " agents per team");
  }
}

BattleConfig BattleConfig::small() { return {}; }

BattleConfig BattleConfig::large() {
  BattleConfig c;
  c.width = c.height = 28;
  c.agents = 16;
  return c;
}

BattleEnv::BattleEnv(BattleConfig config) : config_(config) {
  config_.validate();
  spec_.name = "battle";
  spec_.teams = 2;
  spec_.agents = config_.agents;
  spec_.actions = kBattleActions;
  spec_.obs_dim = config_.view * config_.view * 3 + 3 + config_.minimap * config_.minimap * 2;
  spec_.state_dim = config_.minimap * config_.minimap * 2 + 1;
  spec_.max_steps = config_.max_ticks;
  events_.assign(2, {});
}

bool BattleEnv::in_bounds(int x, int y) const {
  return x >= 0 && y >= 0 && x < static_cast<int>(config_.width) && y < static_cast<int>(config_.height);
}

std::size_t BattleEnv::cell(int x, int y) const {
  return static_cast<std::size_t>(y) * config_.width + static_cast<std::size_t>(x);
}

std::array<int, 2> BattleEnv::direction(std::size_t team, std::size_t dir) {
  static constexpr int dx[4] = {0, 0, -1, 1};
  static constexpr int dy[4] = {-1, 1, 0, 0};
  const int s = team == 0 ? 1 : -1;
  return {s * dx[dir], s * dy[dir]};
}

std::array<int, 2> BattleEnv::to_frame(std::size_t team, int x, int y) const {
  if (team == 0) return {x, y};
  return {static_cast<int>(config_.width) - 1 - x, static_cast<int>(config_.height) - 1 - y};
}

void BattleEnv::reset(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = config_.agents;
  const std::size_t band = std::max<std::size_t>(3, config_.width / 4);
  const int x0 = static_cast<int>(config_.width / 2 - 1 - band);
  const int y0 = static_cast<int>(config_.height / 4);
  const std::size_t rows = config_.height / 2;
  std::vector<std::size_t> slots(band * rows);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);

  units_.assign(2 * n, {});
  for (std::size_t i = 0; i < n; ++i) {
    Unit& a = units_[i];
    a.team = 0;
    a.x = x0 + static_cast<int>(slots[i] % band);
    a.y = y0 + static_cast<int>(slots[i] / band);
    a.hp = config_.hp;
    a.alive = true;
    Unit& b = units_[n + i];
    b = a;
    b.team = 1;
    b.x = static_cast<int>(config_.width) - 1 - a.x;
    b.y = static_cast<int>(config_.height) - 1 - a.y;
  }
  tick_ = 0;
  done_ = false;
  events_.assign(2, {});
}

void BattleEnv::set_units(std::vector<Unit> units, std::size_t tick) {
  if (units.size() != 2 * config_.agents) throw std::invalid_argument("battle: wrong unit count");
  std::vector<char> occ(config_.width * config_.height, 0);
  for (std::size_t u = 0; u < units.size(); ++u) {
    units[u].team = u < config_.agents ? 0 : 1;
    if (!units[u].alive) continue;
    if (!in_bounds(units[u].x, units[u].y)) throw std::invalid_argument("battle: unit out of bounds");
    if (units[u].hp < 1) throw std::invalid_argument("battle: live unit with no hp");
    if (occ[cell(units[u].x, units[u].y)]++) throw std::invalid_argument("battle: two units share a cell");
  }
  units_ = std::move(units);
  tick_ = tick;
  events_.assign(2, {});
  done_ = false;
  refresh_done();
}

const Unit& BattleEnv::unit(std::size_t team, std::size_t agent) const {
  if (team > 1 || agent >= config_.agents) throw std::out_of_range("battle: no such unit");
  return units_[team * config_.agents + agent];
}

bool BattleEnv::alive(std::size_t team, std::size_t agent) const { return unit(team, agent).alive; }

int BattleEnv::winner() const {
  const bool a = alive_count(0) > 0, b = alive_count(1) > 0;
  if (a && !b) return 0;
  if (b && !a) return 1;
  return -1;
}

void BattleEnv::refresh_done() {
  done_ = alive_count(0) == 0 || alive_count(1) == 0 || tick_ >= config_.max_ticks;
}

StepOutcome BattleEnv::step(const JointActions& actions) {
  if (done_) throw std::logic_error("battle: step after episode end");
  const std::size_t n = config_.agents;
  if (actions.size() != 2 || actions[0].size() != n || actions[1].size() != n) {
    throw std::invalid_argument("battle: expected two teams of " + std::to_string(n) + " actions");
  }
  for (const auto& team : actions)
    for (std::size_t a : team)
      if (a >= kBattleActions) throw std::out_of_range("battle: action " + std::to_string(a) + " out of range");

  const std::size_t nu = units_.size();
  auto act = [&](std::size_t u) { return actions[u / n][u % n]; };
  std::vector<std::vector<EventKind>> ev(nu);

  // Occupancy before moves: cell -> unit index + 1.
  std::vector<std::size_t> occ(config_.width * config_.height, 0);
  for (std::size_t u = 0; u < nu; ++u)
    if (units_[u].alive) occ[cell(units_[u].x, units_[u].y)] = u + 1;

  std::vector<char> mover(nu, 0);
  std::vector<std::size_t> target(nu, 0);
  for (std::size_t u = 0; u < nu; ++u) {
    const std::size_t a = act(u);
    if (!units_[u].alive || a < kMoveUp || a > kMoveRight) continue;
    const auto d = direction(units_[u].team, a - kMoveUp);
    const int tx = units_[u].x + d[0], ty = units_[u].y + d[1];
    if (!in_bounds(tx, ty)) continue;
    mover[u] = 1;
    target[u] = cell(tx, ty);
  }
  std::vector<std::size_t> claims(occ.size(), 0);
  for (bool changed = true; changed;) {
    changed = false;
    std::fill(claims.begin(), claims.end(), 0);
    for (std::size_t u = 0; u < nu; ++u)
      if (mover[u]) ++claims[target[u]];
    std::vector<char> cancel(nu, 0);
    for (std::size_t u = 0; u < nu; ++u) {
      if (!mover[u]) continue;
      if (claims[target[u]] > 1) cancel[u] = 1;
      const std::size_t o = occ[target[u]];
      if (o == 0) continue;
      const std::size_t v = o - 1;
      if (!mover[v]) cancel[u] = 1;
      else if (target[v] == cell(units_[u].x, units_[u].y)) cancel[u] = 1;
    }
    for (std::size_t u = 0; u < nu; ++u) {
      if (cancel[u]) {
        mover[u] = 0;
        changed = true;
      }
    }
  }
  for (std::size_t u = 0; u < nu; ++u) {
    if (!mover[u]) continue;
    units_[u].x = static_cast<int>(target[u] % config_.width);
    units_[u].y = static_cast<int>(target[u] / config_.width);
    ev[u].push_back(EventKind::move);
  }

  std::fill(occ.begin(), occ.end(), 0);
  for (std::size_t u = 0; u < nu; ++u)
    if (units_[u].alive) occ[cell(units_[u].x, units_[u].y)] = u + 1;

  std::vector<std::vector<std::size_t>> hits(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    const std::size_t a = act(u);
    if (!units_[u].alive || a < kAttackUp) continue;
    const auto d = direction(units_[u].team, a - kAttackUp);
    const int tx = units_[u].x + d[0], ty = units_[u].y + d[1];
    const std::size_t o = in_bounds(tx, ty) ? occ[cell(tx, ty)] : 0;
    if (o == 0 || units_[o - 1].team == units_[u].team) {
      ev[u].push_back(EventKind::attack_blank);
      continue;
    }
    ev[u].push_back(EventKind::attack_enemy);
    ev[o - 1].push_back(EventKind::attacked_or_killed);
    hits[o - 1].push_back(u);
  }
  for (std::size_t v = 0; v < nu; ++v) {
    if (hits[v].empty()) continue;
    units_[v].hp -= static_cast<int>(hits[v].size());
    if (units_[v].hp <= 0) {
      units_[v].hp = 0;
      units_[v].alive = false;
      ev[hits[v].front()].push_back(EventKind::kill_enemy);
    }
  }

  events_.assign(2, {});
  for (std::size_t u = 0; u < nu; ++u)
    for (EventKind k : ev[u]) events_[u / n].push_back({k, u % n});

  ++tick_;
  refresh_done();
  return {{team_reward(events_[0], config_.utilities), team_reward(events_[1], config_.utilities)}, done_};
}

std::vector<double> BattleEnv::observe(std::size_t team, std::size_t agent) const {
  const Unit& me = unit(team, agent);
  std::vector<double> o(spec_.obs_dim, 0.0);
  if (!me.alive) return o;
  const int r = static_cast<int>(config_.view / 2);
  const int side = static_cast<int>(config_.view);
  const int s = team == 0 ? 1 : -1;
  std::vector<std::size_t> occ(config_.width * config_.height, 0);
  for (std::size_t u = 0; u < units_.size(); ++u)
    if (units_[u].alive) occ[cell(units_[u].x, units_[u].y)] = u + 1;

  for (int fy = -r; fy <= r; ++fy) {
    for (int fx = -r; fx <= r; ++fx) {
      const int wx = me.x + s * fx, wy = me.y + s * fy;
      if (!in_bounds(wx, wy)) continue;
      const std::size_t oc = occ[cell(wx, wy)];
      if (oc == 0) continue;
      const Unit& other = units_[oc - 1];
      const std::size_t base = 3 * static_cast<std::size_t>((fy + r) * side + (fx + r));
      o[base + (other.team == team ? 0 : 1)] = 1.0;
      o[base + 2] = static_cast<double>(other.hp) / config_.hp;
    }
  }
  std::size_t k = config_.view * config_.view * 3;
  const auto f = to_frame(team, me.x, me.y);
  o[k++] = static_cast<double>(f[0]) / static_cast<double>(config_.width - 1);
  o[k++] = static_cast<double>(f[1]) / static_cast<double>(config_.height - 1);
  o[k++] = static_cast<double>(me.hp) / config_.hp;
  const std::size_t m = config_.minimap;
  for (const Unit& u : units_) {
    if (!u.alive) continue;
    const auto uf = to_frame(team, u.x, u.y);
    const std::size_t px = static_cast<std::size_t>(uf[0]) * m / config_.width;
    const std::size_t py = static_cast<std::size_t>(uf[1]) * m / config_.height;
    o[k + 2 * (py * m + px) + (u.team == team ? 0 : 1)] += 1.0 / static_cast<double>(config_.agents);
  }
  return o;
}

std::vector<double> BattleEnv::state(std::size_t team) const {
  if (team > 1) throw std::out_of_range("battle: no such team");
  const std::size_t m = config_.minimap;
  std::vector<double> s(spec_.state_dim, 0.0);
  const double total = static_cast<double>(config_.agents) * config_.hp;
  for (const Unit& u : units_) {
    if (!u.alive) continue;
    const auto uf = to_frame(team, u.x, u.y);
    const std::size_t px = static_cast<std::size_t>(uf[0]) * m / config_.width;
    const std::size_t py = static_cast<std::size_t>(uf[1]) * m / config_.height;
    s[2 * (py * m + px) + (u.team == team ? 0 : 1)] += u.hp / total;
  }
  s.back() = static_cast<double>(tick_) / static_cast<double>(config_.max_ticks);
  return s;
}

std::vector<std::size_t> scripted_actions(const BattleEnv& env, std::size_t team) {
  const std::size_t n = env.config().agents;
  std::vector<std::size_t> out(n, kNoop);
  const auto& units = env.units();
  for (std::size_t i = 0; i < n; ++i) {
    const Unit& me = env.unit(team, i);
    if (!me.alive) continue;
    int best_hp = 0;
    for (std::size_t dir = 0; dir < 4; ++dir) {
      const auto d = BattleEnv::direction(team, dir);
      for (const Unit& u : units) {
        if (u.alive && u.team != team && u.x == me.x + d[0] && u.y == me.y + d[1] &&
            (best_hp == 0 || u.hp < best_hp)) {
          best_hp = u.hp;
          out[i] = kAttackUp + dir;
        }
      }
    }
    if (best_hp > 0) continue;
    int best = -1;
    std::array<int, 2> gap{};
    for (const Unit& u : units) {
      if (!u.alive || u.team == team) continue;
      const auto a = env.to_frame(team, me.x, me.y);
      const auto b = env.to_frame(team, u.x, u.y);
      const int dist = std::abs(b[0] - a[0]) + std::abs(b[1] - a[1]);
      if (best < 0 || dist < best) {
        best = dist;
        gap = {b[0] - a[0], b[1] - a[1]};
      }
    }
    if (best < 0) continue;
    if (std::abs(gap[1]) >= std::abs(gap[0])) {
      out[i] = gap[1] < 0 ? kMoveUp : kMoveDown;
    } else {
      out[i] = gap[0] < 0 ? kMoveLeft : kMoveRight;
    }
  }
  return out;
}

}  // namespace mrgr::envs
