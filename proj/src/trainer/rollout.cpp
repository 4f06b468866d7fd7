#include "mrgr/trainer/rollout.hpp"

#include <stdexcept>

#include "mrgr/diffcore/ops.hpp"
#include "mrgr/envs/battle.hpp"

namespace mrgr::trainer {

using diff::Tensor;

double TeamTrace::total_reward() const {
  double r = 0.0;
  for (const auto& s : steps) r += s.reward;
  return r;
}

std::size_t argmax_action(std::span<const double> values, bool lowest_index_ties, Rng& rng) {
  if (values.empty()) throw std::invalid_argument("argmax_action: empty vector");
  double best = values[0];
  for (double x : values) best = std::max(best, x);
  std::vector<std::size_t> ties;
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (values[a] != best) continue;
    if (lowest_index_ties) return a;
    ties.push_back(a);
  }
  return ties.size() == 1 ? ties[0] : ties[uniform_index(rng, ties.size())];
}

LearnerController::LearnerController(const NetworkBundle& bundle, ActConfig act)
    : bundle_(bundle), act_(act) {}

void LearnerController::reset(const envs::Env& env, std::size_t) {
  const std::size_t n = env.spec().agents;
  if (bundle_.has_filter()) {
    const auto& fc = bundle_.filter.config();
    belief_ = belief::init_belief(n, fc.particles, fc.hidden);
  }
  prev_actions_.assign(n, env.spec().actions);
}

std::vector<std::size_t> LearnerController::act(const envs::Env& env, std::size_t team, Rng& rng,
                                                StepRecord* record) {
  const auto& spec = env.spec();
  const std::size_t n = spec.agents, o = spec.obs_dim, na = spec.actions;
  std::vector<double> obs_all;
  obs_all.reserve(n * o);
  std::vector<char> alive(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ob = env.observe(team, i);
    obs_all.insert(obs_all.end(), ob.begin(), ob.end());
    alive[i] = env.alive(team, i) ? 1 : 0;
  }

  diff::NoGradGuard no_grad;
  const Tensor obs = Tensor::from(n, o, obs_all);
  Tensor kappa = obs;
  if (bundle_.has_filter()) {
    if (record) {
      record->prev_hidden.assign(belief_.hidden.data().begin(), belief_.hidden.data().end());
      record->prev_weights.assign(belief_.weights.data().begin(), belief_.weights.data().end());
    }
    auto r = bundle_.filter.update(belief_, belief::one_hot_rows(prev_actions_, na), obs);
    kappa = r.kappa;
    belief_ = std::move(r.belief);
  }
  const Tensor x = bundle_.input_rows(kappa, obs);
  Tensor scores = bundle_.q.forward(x);
  if (bundle_.has_values()) scores = diff::sub(scores, bundle_.v.forward(x));
  scores_.assign(scores.data().begin(), scores.data().end());

  std::vector<std::size_t> actions(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    const std::span<const double> row(scores_.data() + i * na, na);
    if (bundle_.has_values()) {
      actions[i] = regret::select_action(row, {act_.mode, act_.epsilon, act_.evaluation}, rng);
    } else if (act_.epsilon > 0.0 && uniform01(rng) < act_.epsilon) {
      actions[i] = uniform_index(rng, na);
    } else {
      actions[i] = argmax_action(row, act_.evaluation, rng);
    }
  }
  if (record) {
    record->obs = std::move(obs_all);
    record->kappa.assign(kappa.data().begin(), kappa.data().end());
    record->prev_actions = prev_actions_;
  }
  prev_actions_ = actions;
  return actions;
}

std::vector<std::size_t> ScriptedController::act(const envs::Env& env, std::size_t team, Rng&,
                                                 StepRecord*) {
  const auto* battle = dynamic_cast<const envs::BattleEnv*>(&env);
  if (!battle) throw std::invalid_argument("scripted controller needs a battle environment");
  return envs::scripted_actions(*battle, team);
}

std::vector<std::size_t> RandomController::act(const envs::Env& env, std::size_t team, Rng& rng,
                                               StepRecord*) {
  std::vector<std::size_t> a(env.spec().agents, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (env.alive(team, i)) a[i] = uniform_index(rng, env.spec().actions);
  return a;
}

EpisodeResult rollout_episode(envs::Env& env, std::span<Controller* const> controllers,
                              std::span<const bool> record, std::uint64_t seed) {
  const auto& spec = env.spec();
  if (controllers.size() != spec.teams || record.size() != spec.teams) {
    throw std::invalid_argument("rollout: need one controller and record flag per team");
  }
  env.reset(seed);
  Rng rng(derive_seed(seed, 0xAC7));
  EpisodeResult result;
  result.returns.assign(spec.teams, 0.0);
  std::vector<std::size_t> trace_of(spec.teams, 0);
  for (std::size_t t = 0; t < spec.teams; ++t) {
    controllers[t]->reset(env, t);
    if (record[t]) {
      trace_of[t] = result.traces.size();
      TeamTrace tr;
      tr.team = t;
      tr.agents = spec.agents;
      tr.obs_dim = spec.obs_dim;
      result.traces.push_back(std::move(tr));
    }
  }

  while (!env.done()) {
    envs::JointActions actions(spec.teams);
    std::vector<StepRecord> recs(spec.teams);
    for (std::size_t t = 0; t < spec.teams; ++t) {
      StepRecord* rec = record[t] ? &recs[t] : nullptr;
      if (rec) {
        rec->state = env.state(t);
        rec->alive.resize(spec.agents);
        for (std::size_t i = 0; i < spec.agents; ++i) rec->alive[i] = env.alive(t, i) ? 1 : 0;
      }
      actions[t] = controllers[t]->act(env, t, rng, rec);
      if (rec) rec->actions = actions[t];
    }
    const auto out = env.step(actions);
    for (std::size_t t = 0; t < spec.teams; ++t) {
      result.returns[t] += out.rewards[t];
      if (!record[t]) continue;
      recs[t].reward = out.rewards[t];
      recs[t].done = out.done;
      TeamTrace& tr = result.traces[trace_of[t]];
      if (tr.kappa_dim == 0 && !recs[t].obs.empty()) tr.kappa_dim = recs[t].kappa.size() / spec.agents;
      tr.steps.push_back(std::move(recs[t]));
    }
  }
  result.length = env.steps_taken();
  if (const auto* battle = dynamic_cast<const envs::BattleEnv*>(&env)) result.winner = battle->winner();
  return result;
}

}  // namespace mrgr::trainer
