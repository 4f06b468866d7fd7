#pragma once

// Team-regret accounting: clipping, additive and shaped team sums, action
// selection from per-action regrets, and a tabular accumulator.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrgr/rng.hpp"

namespace mrgr::regret {

inline double positive_clip(double x) { return x > 0.0 ? x : 0.0; }

enum class SelectMode { greedy, regret_matching };

SelectMode parse_select_mode(const std::string& s);
std::string to_string(SelectMode m);

struct SelectOptions {
  SelectMode mode = SelectMode::greedy;
  double epsilon = 0.0;
  // Evaluation: ties among positive maxima go to the lowest index.
  // Training: ties are broken uniformly at random.
  bool lowest_index_ties = false;
};

// Picks an action from per-action regrets. If every clipped regret is zero the
// choice is uniform, in both modes. Throws std::invalid_argument on an empty
// or non-finite vector.
std::size_t select_action(std::span<const double> regrets, const SelectOptions& options, Rng& rng);

// sum(q) - sum(v). Throws std::invalid_argument on a length mismatch.
double team_regret_additive(std::span<const double> per_agent_q, std::span<const double> per_agent_v);

// sum(regrets) + c, where c depends on the global state only.
double team_regret_shaped(std::span<const double> per_agent_regret, double shaping);

// Agent-local information state. `history` is an opaque token sequence
// (initial-belief id, then interleaved actions and observation ids) cut to a
// fixed horizon; two keys are equal iff agent and tokens are equal.
struct InfoStateKey {
  std::size_t agent = 0;
  std::vector<std::int64_t> history;

  static InfoStateKey make(std::size_t agent, std::span<const std::int64_t> tokens,
                           std::size_t horizon);
  std::string to_string() const;
  auto operator<=>(const InfoStateKey&) const = default;
};

using ActionKey = std::pair<InfoStateKey, std::size_t>;

class RegretTable {
 public:
  // REG(I, a) += q(I, a) - v(I) for every (I, a) in q, then the episode count
  // advances. Throws std::invalid_argument (leaving the table untouched) when
  // some visited I has no v entry.
  void update(const std::map<ActionKey, double>& q, const std::map<InfoStateKey, double>& v);

  double value(const InfoStateKey& key, std::size_t action) const;
  bool contains(const InfoStateKey& key, std::size_t action) const;
  // Accumulated regrets for actions [0, n_actions); missing entries read 0.
  std::vector<double> regrets(const InfoStateKey& key, std::size_t n_actions) const;

  std::uint64_t episode_count() const { return episodes_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<ActionKey, double>& entries() const { return entries_; }

 private:
  std::map<ActionKey, double> entries_;
  std::uint64_t episodes_ = 0;
};

RegretTable tabular_update(RegretTable table, const std::map<ActionKey, double>& q,
                           const std::map<InfoStateKey, double>& v);

struct ConsistencyReport {
  std::size_t n_agents = 0;
  std::size_t n_actions = 0;
  std::size_t trials = 0;
  std::size_t additive_violations = 0;
  std::size_t shaped_violations = 0;

  std::size_t violations() const { return additive_violations + shaped_violations; }
  std::string summary() const;
};

// Randomized check that the joint action maximizing the team regret (found by
// enumerating every joint action) equals the tuple of per-agent argmaxes of
// the clipped regrets. Each trial draws per-agent q vectors and v scalars,
// resampling until every agent has a unique, strictly positive best regret,
// and a random action-independent shaping term for the shaped variant.
// Trial i draws from its own stream derive_seed(seed, i), so the parallel
// and serial versions return identical reports.
ConsistencyReport consistency_check(std::size_t n_agents, std::size_t n_actions,
                                    std::size_t trials, std::uint64_t seed);
ConsistencyReport consistency_check_serial(std::size_t n_agents, std::size_t n_actions,
                                           std::size_t trials, std::uint64_t seed);

inline constexpr std::size_t kMaxCheckAgents = 4;
inline constexpr std::size_t kMaxCheckActions = 6;

}  // namespace mrgr::regret
