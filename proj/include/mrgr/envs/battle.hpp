#pragma once

// Two-army grid battle.
//
// Each unit picks one of 9 actions per tick: no-op, move up/down/left/right,
// or attack the adjacent cell up/down/left/right. Resolution is simultaneous:
// moves first (a move is cancelled if another unit claims the same cell, if
// the cell holds a unit that stays put, or if two units would swap), then
// attacks against post-move positions, each hit removing 1 hp.
//
// Team 1 sees the world rotated by 180 degrees, so "up" always points toward
// the enemy's home side and one shared policy can drive either team.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrgr/envs/env.hpp"

namespace mrgr::envs {

enum class EventKind { move, kill_enemy, attack_enemy, attack_blank, attacked_or_killed };

std::string to_string(EventKind k);

struct RewardEvent {
  EventKind kind;
  std::size_t agent;
};

struct RewardUtilities {
  double move = -0.005;
  double kill_enemy = 5.0;
  double attack_enemy = 0.2;
  double attack_blank = -0.1;
  double attacked_or_killed = -0.1;

  double of(EventKind k) const;
};

// Sum of per-event utilities over one team's events.
double team_reward(std::span<const RewardEvent> events, const RewardUtilities& u = {});

enum BattleAction : std::size_t {
  kNoop = 0,
  kMoveUp,
  kMoveDown,
  kMoveLeft,
  kMoveRight,
  kAttackUp,
  kAttackDown,
  kAttackLeft,
  kAttackRight,
  kBattleActions
};

struct BattleConfig {
  std::size_t width = 20;
  std::size_t height = 20;
  std::size_t agents = 8;  // per team
  int hp = 2;
  std::size_t view = 7;     // odd window side
  std::size_t minimap = 5;  // pooled map side, in observations and state
  std::size_t max_ticks = 100;
  RewardUtilities utilities;

  void validate() const;
  static BattleConfig small();  // 8v8 on 20x20
  static BattleConfig large();  // 16v16 on 28x28
};

struct Unit {
  std::size_t team = 0;
  int x = 0;
  int y = 0;
  int hp = 0;
  bool alive = false;
};

class BattleEnv final : public Env {
 public:
  explicit BattleEnv(BattleConfig config = {});

  const EnvSpec& spec() const override { return spec_; }
  void reset(std::uint64_t seed) override;
  StepOutcome step(const JointActions& actions) override;
  bool done() const override { return done_; }
  std::size_t steps_taken() const override { return tick_; }

  // view x view x {ally, enemy, hp fraction} window centred on the agent,
  // then own position (2) and hp fraction (1) and a minimap x minimap x
  // {ally share, enemy share} map, all in the team's frame. Dead agents
  // observe zeros.
  std::vector<double> observe(std::size_t team, std::size_t agent) const override;
  // minimap x minimap x {own hp share, enemy hp share}, then tick / max_ticks.
  std::vector<double> state(std::size_t team) const override;
  bool alive(std::size_t team, std::size_t agent) const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<BattleEnv>(*this); }

  const BattleConfig& config() const { return config_; }
  const std::vector<Unit>& units() const { return units_; }
  const Unit& unit(std::size_t team, std::size_t agent) const;
  // Events of the last step, per team.
  const std::vector<std::vector<RewardEvent>>& last_events() const { return events_; }
  // 0 or 1 once a team has been eliminated alone, -1 otherwise (ongoing or draw).
  int winner() const;
  // Sets units directly (tests and replays); validates occupancy.
  void set_units(std::vector<Unit> units, std::size_t tick = 0);

  // World offset of a team-frame direction (up, down, left, right = 0..3).
  static std::array<int, 2> direction(std::size_t team, std::size_t dir);
  // Team-frame coordinates of a world cell.
  std::array<int, 2> to_frame(std::size_t team, int x, int y) const;

 private:
  bool in_bounds(int x, int y) const;
  std::size_t cell(int x, int y) const;
  void refresh_done();

  BattleConfig config_;
  EnvSpec spec_;
  std::vector<Unit> units_;
  std::vector<std::vector<RewardEvent>> events_;
  std::size_t tick_ = 0;
  bool done_ = false;
};

// Scripted opponent: attack an adjacent enemy (lowest hp first, then the
// direction order up, down, left, right), otherwise step toward the nearest
// enemy along the axis with the larger gap. Deterministic.
std::vector<std::size_t> scripted_actions(const BattleEnv& env, std::size_t team);

}  // namespace mrgr::envs
