#pragma once

// Episode traces, per-team controllers, and the rollout loop.
//
// Controllers see only what an agent may see at execution time: each
// agent's observation and the shared read-only networks. The global state
// is written into the trace for the centralized losses but never read here.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mrgr/belief/filter.hpp"
#include "mrgr/envs/env.hpp"
#include "mrgr/rng.hpp"
#include "mrgr/trainer/bundle.hpp"

namespace mrgr::trainer {

// One step of one team. Per-agent arrays are agent-major.
struct StepRecord {
  std::vector<double> obs;           // agents x obs_dim
  std::vector<double> kappa;         // agents x kappa_dim
  std::vector<double> prev_hidden;   // (agents * X) x H, filter methods only
  std::vector<double> prev_weights;  // agents x X, filter methods only
  std::vector<std::size_t> prev_actions;  // n_actions encodes "none"
  std::vector<std::size_t> actions;
  std::vector<char> alive;           // alive when acting
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
};

struct TeamTrace {
  std::size_t team = 0;
  std::size_t agents = 0;
  std::size_t obs_dim = 0;
  std::size_t kappa_dim = 0;
  std::vector<StepRecord> steps;

  double total_reward() const;
  std::size_t length() const { return steps.size(); }
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(const envs::Env& env, std::size_t team) = 0;
  // Returns one action per agent (ignored for dead agents). When `record`
  // is set, fills its agent-side fields.
  virtual std::vector<std::size_t> act(const envs::Env& env, std::size_t team, Rng& rng,
                                       StepRecord* record) = 0;
};

struct ActConfig {
  double epsilon = 0.0;
  bool evaluation = false;  // lowest-index ties
  regret::SelectMode mode = regret::SelectMode::greedy;
};

// Drives a team with a NetworkBundle. Regret methods act on
// reg(a) = q(x)[a] - v(x); value-based methods act greedily on q(x).
class LearnerController final : public Controller {
 public:
  LearnerController(const NetworkBundle& bundle, ActConfig act);
  void reset(const envs::Env& env, std::size_t team) override;
  std::vector<std::size_t> act(const envs::Env& env, std::size_t team, Rng& rng,
                               StepRecord* record) override;

  // Per-agent regret (or Q) rows from the last act() call.
  const std::vector<double>& last_scores() const { return scores_; }

 private:
  const NetworkBundle& bundle_;
  ActConfig act_;
  belief::Belief belief_;
  std::vector<std::size_t> prev_actions_;
  std::vector<double> scores_;
};

class ScriptedController final : public Controller {
 public:
  void reset(const envs::Env&, std::size_t) override {}
  std::vector<std::size_t> act(const envs::Env& env, std::size_t team, Rng& rng,
                               StepRecord* record) override;
};

class RandomController final : public Controller {
 public:
  void reset(const envs::Env&, std::size_t) override {}
  std::vector<std::size_t> act(const envs::Env& env, std::size_t team, Rng& rng,
                               StepRecord* record) override;
};

struct EpisodeResult {
  std::vector<TeamTrace> traces;  // one per recorded team, in team order
  std::vector<double> returns;    // per team
  int winner = -1;                // battle only; -1 for draws and single-team envs
  std::size_t length = 0;
};

// Resets env with `seed` and plays to the end. controllers[t] drives team t;
// record[t] selects which teams produce a trace. Action randomness comes from
// a stream derived from `seed`.
EpisodeResult rollout_episode(envs::Env& env, std::span<Controller* const> controllers,
                              std::span<const bool> record, std::uint64_t seed);

// Argmax with the given tie rule (lowest index, or uniform among ties).
std::size_t argmax_action(std::span<const double> values, bool lowest_index_ties, Rng& rng);

}  // namespace mrgr::trainer
