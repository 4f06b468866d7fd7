#include "mrgr/regret/regret.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mrgr::regret {

SelectMode parse_select_mode(const std::string& s) {
  if (s == "greedy") return SelectMode::greedy;
  if (s == "regret_matching") return SelectMode::regret_matching;
  throw std::invalid_argument("unknown selection mode '" + s + "' (expected greedy|regret_matching)");
}

std::string to_string(SelectMode m) {
  return m == SelectMode::greedy ? "greedy" : "regret_matching";
}

std::size_t select_action(std::span<const double> regrets, const SelectOptions& options, Rng& rng) {
  const std::size_t n = regrets.size();
  if (n == 0) throw std::invalid_argument("select_action: empty regret vector");
  for (double r : regrets) {
    if (!std::isfinite(r)) throw std::invalid_argument("select_action: non-finite regret");
  }
  if (options.epsilon > 0.0 && uniform01(rng) < options.epsilon) return uniform_index(rng, n);

  double best = 0.0;
  for (double r : regrets) best = std::max(best, positive_clip(r));
  if (best == 0.0) return uniform_index(rng, n);

  if (options.mode == SelectMode::regret_matching) {
    double total = 0.0;
    for (double r : regrets) total += positive_clip(r);
    double u = uniform01(rng) * total;
    std::size_t last = 0;
    for (std::size_t a = 0; a < n; ++a) {
      const double p = positive_clip(regrets[a]);
      if (p == 0.0) continue;
      last = a;
      if (u < p) return a;
      u -= p;
    }
    return last;
  }

  std::vector<std::size_t> ties;
  for (std::size_t a = 0; a < n; ++a) {
    if (positive_clip(regrets[a]) != best) continue;
    if (options.lowest_index_ties) return a;
    ties.push_back(a);
  }
  return ties.size() == 1 ? ties[0] : ties[uniform_index(rng, ties.size())];
}

double team_regret_additive(std::span<const double> per_agent_q, std::span<const double> per_agent_v) {
  if (per_agent_q.size() != per_agent_v.size()) {
    throw std::invalid_argument("team_regret_additive: q and v lengths differ");
  }
  double q = 0.0, v = 0.0;
  for (double x : per_agent_q) q += x;
  for (double x : per_agent_v) v += x;
  return q - v;
}

double team_regret_shaped(std::span<const double> per_agent_regret, double shaping) {
  double s = 0.0;
  for (double x : per_agent_regret) s += x;
  return s + shaping;
}

InfoStateKey InfoStateKey::make(std::size_t agent, std::span<const std::int64_t> tokens,
                                std::size_t horizon) {
  InfoStateKey k;
  k.agent = agent;
  const std::size_t n = std::min(horizon, tokens.size());
  k.history.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(n));
  return k;
}

std::string InfoStateKey::to_string() const {
  std::ostringstream os;
  os << agent << ':';
  for (std::size_t i = 0; i < history.size(); ++i) os << (i ? "," : "") << history[i];
  return os.str();
}

void RegretTable::update(const std::map<ActionKey, double>& q,
                         const std::map<InfoStateKey, double>& v) {
  for (const auto& [key, _] : q) {
    if (!v.contains(key.first)) {
      throw std::invalid_argument("tabular_update: no v entry for visited state " +
                                  key.first.to_string());
    }
  }
  for (const auto& [key, qv] : q) entries_[key] += qv - v.at(key.first);
  ++episodes_;
}

double RegretTable::value(const InfoStateKey& key, std::size_t action) const {
  auto it = entries_.find({key, action});
  return it == entries_.end() ? 0.0 : it->second;
}

bool RegretTable::contains(const InfoStateKey& key, std::size_t action) const {
  return entries_.contains({key, action});
}

std::vector<double> RegretTable::regrets(const InfoStateKey& key, std::size_t n_actions) const {
  std::vector<double> out(n_actions);
  for (std::size_t a = 0; a < n_actions; ++a) out[a] = value(key, a);
  return out;
}

RegretTable tabular_update(RegretTable table, const std::map<ActionKey, double>& q,
                           const std::map<InfoStateKey, double>& v) {
  table.update(q, v);
  return table;
}

std::string ConsistencyReport::summary() const {
  std::ostringstream os;
  os << "consistency agents=" << n_agents << " actions=" << n_actions << " trials=" << trials
     << " additive_violations=" << additive_violations
     << " shaped_violations=" << shaped_violations << (violations() == 0 ? " OK" : " FAIL");
  return os.str();
}

namespace {

void validate_check(std::size_t n_agents, std::size_t n_actions, std::size_t trials) {
  if (trials == 0) throw std::invalid_argument("consistency_check: trials must be positive");
  if (n_agents < 1 || n_agents > kMaxCheckAgents) {
    throw std::invalid_argument("consistency_check: agents must be in [1, 4]");
  }
  if (n_actions < 1 || n_actions > kMaxCheckActions) {
    throw std::invalid_argument("consistency_check: actions must be in [1, 6]");
  }
}

struct TrialResult {
  bool additive_ok = true;
  bool shaped_ok = true;
};

// Minimum gap between an agent's best and second-best regret; smaller gaps
// are treated as ties and resampled.
constexpr double kUniqueGap = 1e-9;

TrialResult run_trial(std::size_t n_agents, std::size_t n_actions, std::uint64_t seed,
                      std::size_t trial) {
  Rng rng(derive_seed(seed, trial));
  std::uniform_real_distribution<double> qdist(-1.0, 1.0);
  std::uniform_real_distribution<double> vdist(-0.5, 0.5);
  std::uniform_real_distribution<double> cdist(-10.0, 10.0);

  std::vector<std::vector<double>> q(n_agents, std::vector<double>(n_actions));
  std::vector<double> v(n_agents);
  std::vector<std::vector<double>> reg(n_agents, std::vector<double>(n_actions));
  for (std::size_t i = 0; i < n_agents; ++i) {
    for (;;) {
      for (double& x : q[i]) x = qdist(rng);
      v[i] = vdist(rng);
      for (std::size_t a = 0; a < n_actions; ++a) reg[i][a] = q[i][a] - v[i];
      std::vector<double> sorted = reg[i];
      std::sort(sorted.rbegin(), sorted.rend());
      const bool positive = sorted[0] > 0.0;
      const bool unique = n_actions == 1 || sorted[0] - sorted[1] > kUniqueGap;
      if (positive && unique) break;
    }
  }
  const double c = cdist(rng);

  std::vector<std::size_t> individual(n_agents);
  Rng unused(0);
  for (std::size_t i = 0; i < n_agents; ++i) {
    individual[i] = select_action(reg[i], {SelectMode::greedy, 0.0, true}, unused);
  }

  std::size_t joint_count = 1;
  for (std::size_t i = 0; i < n_agents; ++i) joint_count *= n_actions;

  std::vector<std::size_t> joint(n_agents, 0);
  std::vector<std::size_t> best_add(n_agents), best_shaped(n_agents);
  double best_add_value = -INFINITY, best_shaped_value = -INFINITY;
  std::vector<double> qs(n_agents), rs(n_agents);
  for (std::size_t j = 0; j < joint_count; ++j) {
    std::size_t code = j;
    for (std::size_t i = 0; i < n_agents; ++i) {
      joint[i] = code % n_actions;
      code /= n_actions;
      qs[i] = q[i][joint[i]];
      rs[i] = reg[i][joint[i]];
    }
    const double add = team_regret_additive(qs, v);
    const double shaped = team_regret_shaped(rs, c);
    if (add > best_add_value) {
      best_add_value = add;
      best_add = joint;
    }
    if (shaped > best_shaped_value) {
      best_shaped_value = shaped;
      best_shaped = joint;
    }
  }
  return {best_add == individual, best_shaped == individual};
}

}  // namespace

ConsistencyReport consistency_check_serial(std::size_t n_agents, std::size_t n_actions,
                                           std::size_t trials, std::uint64_t seed) {
  validate_check(n_agents, n_actions, trials);
  ConsistencyReport report{n_agents, n_actions, trials, 0, 0};
  for (std::size_t t = 0; t < trials; ++t) {
    const TrialResult r = run_trial(n_agents, n_actions, seed, t);
    report.additive_violations += r.additive_ok ? 0 : 1;
    report.shaped_violations += r.shaped_ok ? 0 : 1;
  }
  return report;
}

ConsistencyReport consistency_check(std::size_t n_agents, std::size_t n_actions,
                                    std::size_t trials, std::uint64_t seed) {
  validate_check(n_agents, n_actions, trials);
  std::size_t add_bad = 0, shaped_bad = 0;
  const auto n = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(static) reduction(+ : add_bad, shaped_bad)
  for (std::int64_t t = 0; t < n; ++t) {
    const TrialResult r = run_trial(n_agents, n_actions, seed, static_cast<std::size_t>(t));
    add_bad += r.additive_ok ? 0 : 1;
    shaped_bad += r.shaped_ok ? 0 : 1;
  }
  return {n_agents, n_actions, trials, add_bad, shaped_bad};
}

}  // namespace mrgr::regret
