#include "mrgr/trainer/trainer.hpp"

#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mrgr/diffcore/ops.hpp"
#include "mrgr/rng.hpp"

namespace mrgr::trainer {

namespace {

constexpr std::uint64_t kEpisodeStream = 0xE0;
constexpr std::uint64_t kSampleStream = 0x5A;

std::unique_ptr<Controller> opponent_controller(TrainOpponent o, const NetworkBundle& bundle,
                                                const ActConfig& act) {
  switch (o) {
    case TrainOpponent::self: return std::make_unique<LearnerController>(bundle, act);
    case TrainOpponent::scripted: return std::make_unique<ScriptedController>();
    case TrainOpponent::random: return std::make_unique<RandomController>();
  }
  throw std::logic_error("unknown opponent");
}

void check_finite(double loss, const char* which, std::size_t it, const LossOutput& out) {
  if (std::isfinite(loss)) return;
  double max_abs = 0.0;
  std::size_t bad = 0;
  for (double r : out.residual) {
    if (!std::isfinite(r)) ++bad;
    else max_abs = std::max(max_abs, std::abs(r));
  }
  std::ostringstream msg;
  msg << "non-finite " << which << " at iteration " << it << ": " << out.residual.size()
      << " residuals, " << bad << " non-finite, max finite |residual| " << max_abs;
  throw std::runtime_error(msg.str());
}

double apply(diff::Optimizer& opt, const diff::Tensor& loss) {
  const diff::Gradients g = diff::backward(loss);
  const double norm = g.norm(opt.params());
  opt.step(g);
  return norm;
}

void add_optimizer(diff::CheckpointFile& file, const std::string& tag, const diff::Optimizer& opt) {
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    const auto& p = opt.params()[i];
    if (opt.first_moments().size() > i) {
      file.add(tag + ".m." + p.name(), p.shape(), opt.first_moments()[i]);
      file.add(tag + ".v." + p.name(), p.shape(), opt.second_moments()[i]);
    }
  }
}

void copy_array(const diff::NamedArray& a, const diff::Shape& shape, std::span<double> dst) {
  if (a.shape != shape) {
    throw std::runtime_error("checkpoint array " + a.name + ": expected shape " + diff::to_string(shape) +
                             ", found " + diff::to_string(a.shape));
  }
  std::copy(a.values.begin(), a.values.end(), dst.begin());
}

void restore_optimizer(diff::Optimizer& opt, const std::string& tag, const diff::CheckpointFile& file,
                       std::uint64_t steps) {
  opt.set_steps(steps);
  for (std::size_t i = 0; i < opt.params().size() && i < opt.first_moments().size(); ++i) {
    const auto& p = opt.params()[i];
    copy_array(file.find(tag + ".m." + p.name()), p.shape(), opt.first_moments()[i]);
    copy_array(file.find(tag + ".v." + p.name()), p.shape(), opt.second_moments()[i]);
  }
}

}  // namespace

double win_score(int winner, std::size_t team) {
  if (winner < 0) return 0.5;
  return static_cast<std::size_t>(winner) == team ? 1.0 : 0.0;
}

Trainer::Trainer(TrainConfig config, const envs::Env& prototype, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed), env_(prototype.clone()) {
  config_.validate();
  bundle_ = NetworkBundle(config_, env_->spec(), seed_);
  opt_q_ = diff::Optimizer(config_.optimizer, bundle_.q_params());
  if (bundle_.has_values()) {
    opt_v_ = diff::Optimizer(config_.optimizer, bundle_.v_group_params(!config_.freeze_filter));
  }
}

std::vector<EpisodeResult> Trainer::collect(std::size_t it) const {
  const std::size_t n = config_.batch_episodes;
  const std::size_t teams = env_->spec().teams;
  const ActConfig act{config_.epsilon_at(it), false, config_.select_mode};
  const std::uint64_t stream = derive_seed(seed_, kEpisodeStream);
  std::vector<EpisodeResult> results(n);
  std::exception_ptr error;

  auto play = [&](std::size_t e) {
    auto env = env_->clone();
    std::vector<std::unique_ptr<Controller>> owned;
    owned.push_back(std::make_unique<LearnerController>(bundle_, act));
    for (std::size_t t = 1; t < teams; ++t) owned.push_back(opponent_controller(config_.opponent, bundle_, act));
    std::vector<Controller*> ctrl;
    for (auto& c : owned) ctrl.push_back(c.get());
    const bool record[2] = {true, config_.opponent == TrainOpponent::self};
    results[e] = rollout_episode(*env, ctrl, std::span<const bool>(record, teams), derive_seed(stream, it, e));
  };

  if (config_.single_thread) {
    for (std::size_t e = 0; e < n; ++e) play(e);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t e = 0; e < n; ++e) {
      try {
        play(e);
      } catch (...) {
#pragma omp critical(mrgr_collect_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }
  return results;
}

std::vector<Sample> Trainer::sample(std::span<const TeamTrace> traces, std::size_t it) const {
  std::vector<Sample> out;
  Rng rng(derive_seed(derive_seed(seed_, kSampleStream), it));
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const std::size_t len = traces[t].length();
    if (config_.tau0_per_episode == 0 || config_.tau0_per_episode >= len) {
      for (std::size_t s = 0; s < len; ++s) out.push_back({t, s});
      continue;
    }
    std::vector<std::size_t> steps(len);
    std::iota(steps.begin(), steps.end(), 0);
    for (std::size_t i = 0; i < config_.tau0_per_episode; ++i) {
      std::swap(steps[i], steps[i + uniform_index(rng, len - i)]);
      out.push_back({t, steps[i]});
    }
  }
  return out;
}

IterationMetrics Trainer::update(std::span<const TeamTrace> traces, std::span<const Sample> samples) {
  if (traces.empty() || samples.empty()) throw std::invalid_argument("update: empty batch");
  IterationMetrics m;
  m.iteration = iteration_;
  m.epsilon = config_.epsilon_at(iteration_);

  if (is_value_based(config_.method)) {
    const LossOutput td = loss_td(bundle_, config_, traces, samples);
    m.loss_q = td.loss.item();
    check_finite(m.loss_q, "td loss", iteration_, td);
    m.grad_norm = apply(opt_q_, td.loss);
  } else {
    const LossOutput lq = loss_q(bundle_, config_, traces, samples);
    m.loss_q = lq.loss.item();
    check_finite(m.loss_q, "loss_q", iteration_, lq);
    const LossOutput lv = loss_v(bundle_, config_, traces, samples);
    m.loss_v = lv.loss.item();
    check_finite(*m.loss_v, "loss_v", iteration_, lv);
    const double gq = apply(opt_q_, lq.loss);
    const double gv = apply(opt_v_, lv.loss);
    m.grad_norm = std::sqrt(gq * gq + gv * gv);
  }

  ++iteration_;
  if (is_value_based(config_.method)) {
    if (iteration_ % config_.target_period == 0) bundle_.snapshot_q();
  } else {
    if (iteration_ % config_.snapshot_period == 0) bundle_.snapshot_q();
    if (iteration_ % config_.target_period == 0) bundle_.sync_v_target();
  }
  return m;
}

IterationMetrics Trainer::step() {
  const std::size_t it = iteration_;
  const auto results = collect(it);
  std::vector<TeamTrace> traces;
  double win = 0.0;
  for (const auto& r : results) {
    for (const auto& t : r.traces) traces.push_back(t);
    win += win_score(r.winner);
  }
  const auto samples = sample(traces, it);
  IterationMetrics m = update(traces, samples);
  double total = 0.0;
  for (const auto& t : traces) total += t.total_reward();
  m.mean_return = total / static_cast<double>(traces.size());
  if (env_->spec().teams == 2) m.win_rate = win / static_cast<double>(results.size());
  return m;
}

void Trainer::quantize() {
  for (auto& p : bundle_.all_params()) {
    auto t = p;
    diff::round_to_f32(t.mutable_data());
  }
  for (auto* opt : {&opt_q_, &opt_v_}) {
    for (auto& m : opt->first_moments()) diff::round_to_f32(m);
    for (auto& v : opt->second_moments()) diff::round_to_f32(v);
  }
}

diff::CheckpointFile Trainer::to_checkpoint() const {
  diff::CheckpointFile file;
  for (const auto& p : bundle_.all_params()) {
    file.add(p.name(), p.shape(), {p.data().begin(), p.data().end()});
  }
  add_optimizer(file, "opt_q", opt_q_);
  add_optimizer(file, "opt_v", opt_v_);
  file.meta["iteration"] = iteration_;
  file.meta["seed"] = seed_;
  file.meta["opt_q_steps"] = opt_q_.steps();
  file.meta["opt_v_steps"] = opt_v_.steps();
  file.meta["config"] = config_.to_json();
  file.meta["method"] = to_string(config_.method);
  file.meta["env"] = env_->spec().name;
  return file;
}

void load_params(NetworkBundle& bundle, const diff::CheckpointFile& file) {
  for (auto& p : bundle.all_params()) {
    auto t = p;
    copy_array(file.find(p.name()), p.shape(), t.mutable_data());
  }
}

void Trainer::restore(const diff::CheckpointFile& file) {
  const std::string method = file.meta.value("method", "");
  const std::string env = file.meta.value("env", "");
  if (method != to_string(config_.method) || env != env_->spec().name) {
    throw std::runtime_error("checkpoint holds method '" + method + "' on env '" + env + "', trainer runs '" +
                             to_string(config_.method) + "' on '" + env_->spec().name + "'");
  }
  load_params(bundle_, file);
  restore_optimizer(opt_q_, "opt_q", file, file.meta.at("opt_q_steps").get<std::uint64_t>());
  restore_optimizer(opt_v_, "opt_v", file, file.meta.at("opt_v_steps").get<std::uint64_t>());
  iteration_ = file.meta.at("iteration").get<std::size_t>();
}

}  // namespace mrgr::trainer
