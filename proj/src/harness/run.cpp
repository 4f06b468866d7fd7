#include "mrgr/harness/run.hpp"

#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mrgr/diffcore/checkpoint.hpp"
#include "mrgr/rng.hpp"
#include "mrgr/trainer/rollout.hpp"

namespace mrgr::harness {

namespace fs = std::filesystem;
using trainer::Controller;
using trainer::IterationMetrics;

namespace {

constexpr std::uint64_t kEvalStream = 0xE7A1;

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::ofstream open_for_write(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { open_for_write(path) << j.dump(2) << '\n'; }

// Keeps the header and the rows whose first field is at most `last`.
void truncate_csv(const fs::path& path, const char* header, std::size_t last) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot resume: missing " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != header) throw std::runtime_error("cannot resume: unexpected header in " + path.string());
  std::vector<std::string> keep{line};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (std::stoull(line.substr(0, line.find(','))) <= last) keep.push_back(line);
  }
  in.close();
  auto out = open_for_write(path);
  for (const auto& l : keep) out << l << '\n';
}

std::string describe(const envs::EnvSpec& s) {
  return s.name + " (" + std::to_string(s.agents) + " agents, " + std::to_string(s.actions) + " actions, obs " +
         std::to_string(s.obs_dim) + ")";
}

bool same_env(const envs::EnvSpec& a, const envs::EnvSpec& b) {
  return a.name == b.name && a.teams == b.teams && a.agents == b.agents && a.actions == b.actions &&
         a.obs_dim == b.obs_dim && a.state_dim == b.state_dim;
}

// Configuration fields that may change between a run and its resumption.
nlohmann::json resumable_view(const RunConfig& c) {
  nlohmann::json j = c.to_json();
  j["train"].erase("iterations");
  j["train"].erase("single_thread");
  j.erase("wall_clock");
  return j;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string format_metrics_row(std::size_t iteration, const IterationMetrics& m, std::optional<double> wall_seconds) {
  std::ostringstream row;
  row << iteration << ',' << optional_number(wall_seconds) << ',' << format_number(m.mean_return) << ','
      << optional_number(m.win_rate) << ',' << format_number(m.loss_q) << ',' << optional_number(m.loss_v) << ','
      << format_number(m.epsilon) << ',' << format_number(m.grad_norm);
  return row.str();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j{{"episodes", episodes}, {"mean_return", mean_return}, {"returns", returns}, {"opponent", opponent}};
  j["win_rate"] = win_rate ? nlohmann::json(*win_rate) : nlohmann::json(nullptr);
  return j;
}

Policy load_policy(const fs::path& checkpoint) {
  const diff::CheckpointFile file = diff::read_checkpoint(checkpoint);
  if (!file.meta.contains("run")) throw std::runtime_error(checkpoint.string() + ": checkpoint has no run configuration");
  Policy p;
  p.config = RunConfig::from_json(file.meta.at("run"));
  const auto env = make_env(p.config);
  p.bundle = trainer::NetworkBundle(p.config.train, env->spec(), p.config.seed);
  trainer::load_params(p.bundle, file);
  p.iteration = file.meta.at("iteration").get<std::size_t>();
  return p;
}

Opponent Opponent::parse(const std::string& spec, std::optional<Policy>& storage) {
  Opponent o;
  o.label = spec;
  if (spec == "self") o.kind = Kind::self;
  else if (spec == "scripted") o.kind = Kind::scripted;
  else if (spec == "random") o.kind = Kind::random;
  else {
    storage = load_policy(spec);
    o.kind = Kind::policy;
    o.policy = &*storage;
  }
  return o;
}

EvalReport evaluate(const trainer::NetworkBundle& learner, const envs::Env& env,
                    const Opponent& opponent, std::size_t episodes, std::uint64_t seed, bool single_thread) {
  if (episodes == 0) throw std::invalid_argument("evaluate: episodes must be positive");
  const std::size_t teams = env.spec().teams;
  if (teams == 2 && opponent.kind == Opponent::Kind::policy &&
      !same_env(opponent.policy->bundle.env(), env.spec())) {
    throw std::runtime_error("opponent checkpoint env " + describe(opponent.policy->bundle.env()) +
                             " does not match " + describe(env.spec()));
  }
  EvalReport report;
  report.episodes = episodes;
  report.opponent = teams == 2 ? opponent.label : "none";
  report.returns.assign(episodes, 0.0);
  std::vector<double> wins(episodes, 0.0);
  std::exception_ptr error;

  auto play = [&](std::size_t e) {
    auto local = env.clone();
    const trainer::ActConfig greedy{0.0, true, regret::SelectMode::greedy};
    std::vector<std::unique_ptr<Controller>> owned;
    owned.push_back(std::make_unique<trainer::LearnerController>(learner, greedy));
    if (teams == 2) {
      switch (opponent.kind) {
        case Opponent::Kind::self: owned.push_back(std::make_unique<trainer::LearnerController>(learner, greedy)); break;
        case Opponent::Kind::scripted: owned.push_back(std::make_unique<trainer::ScriptedController>()); break;
        case Opponent::Kind::random: owned.push_back(std::make_unique<trainer::RandomController>()); break;
        case Opponent::Kind::policy:
          owned.push_back(std::make_unique<trainer::LearnerController>(opponent.policy->bundle, greedy));
          break;
      }
    }
    std::vector<Controller*> ctrl;
    for (auto& c : owned) ctrl.push_back(c.get());
    const bool record[2] = {false, false};
    const auto r = trainer::rollout_episode(*local, ctrl, std::span<const bool>(record, teams), derive_seed(seed, e));
    report.returns[e] = r.returns[0];
    wins[e] = trainer::win_score(r.winner);
  };

  if (single_thread) {
    for (std::size_t e = 0; e < episodes; ++e) play(e);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t e = 0; e < episodes; ++e) {
      try {
        play(e);
      } catch (...) {
#pragma omp critical(mrgr_eval_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }
  double total = 0.0, win = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    total += report.returns[e];
    win += wins[e];
  }
  report.mean_return = total / static_cast<double>(episodes);
  if (teams == 2) report.win_rate = win / static_cast<double>(episodes);
  return report;
}

EvalReport run_eval(const fs::path& checkpoint, std::size_t episodes, const std::string& opponent, std::uint64_t seed) {
  const Policy learner = load_policy(checkpoint);
  const auto env = make_env(learner.config);
  std::optional<Policy> storage;
  const Opponent opp = Opponent::parse(opponent, storage);
  if (opp.kind == Opponent::Kind::policy && !same_env(storage->bundle.env(), env->spec())) {
    throw std::runtime_error("checkpoint " + checkpoint.string() + " plays " + describe(env->spec()) + " but " +
                             opponent + " plays " + describe(storage->bundle.env()));
  }
  return evaluate(learner.bundle, *env, opp, episodes, seed, false);
}

TrainReport run_train(const RunConfig& config, const fs::path& out_dir, const TrainRunOptions& options) {
  config.validate();
  try {
    fs::create_directories(out_dir);
  } catch (const fs::filesystem_error& e) {
    throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + e.what());
  }
  const fs::path metrics_path = out_dir / "metrics.csv", eval_path = out_dir / "eval.csv";
  const fs::path checkpoint_path = out_dir / "checkpoint.mrgr";

  const auto env = make_env(config);
  trainer::Trainer trainer(config.train, *env, config.seed);
  std::optional<Policy> opponent_storage;
  const Opponent opponent = Opponent::parse(config.eval_opponent, opponent_storage);

  double wall_offset = 0.0;
  if (options.resume) {
    const diff::CheckpointFile file = diff::read_checkpoint(checkpoint_path);
    const RunConfig saved = RunConfig::from_json(file.meta.at("run"));
    if (resumable_view(saved) != resumable_view(config)) {
      throw std::runtime_error("cannot resume: configuration differs from the one stored in " +
                               checkpoint_path.string());
    }
    trainer.restore(file);
    wall_offset = file.meta.value("wall_seconds", 0.0);
    truncate_csv(metrics_path, kMetricsHeader, trainer.iteration());
    truncate_csv(eval_path, kEvalHeader, trainer.iteration());
  } else {
    open_for_write(metrics_path) << kMetricsHeader << '\n';
    open_for_write(eval_path) << kEvalHeader << '\n';
  }
  write_json(out_dir / "config.json", config.to_json());

  auto metrics = open_for_write(metrics_path, std::ios::app);
  auto evals = open_for_write(eval_path, std::ios::app);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return wall_offset + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  auto checkpoint = [&](const fs::path& path) {
    diff::CheckpointFile file = trainer.to_checkpoint();
    file.meta["run"] = config.to_json();
    if (config.wall_clock) file.meta["wall_seconds"] = elapsed();
    diff::write_checkpoint(path, file);
  };
  auto run_evaluation = [&](std::size_t count) {
    EvalReport r = evaluate(trainer.bundle(), *env, opponent, config.eval_episodes,
                            derive_seed(config.seed, kEvalStream, count), config.train.single_thread);
    evals << count << ',' << r.episodes << ',' << format_number(r.mean_return) << ',' << optional_number(r.win_rate)
          << ',' << r.opponent << '\n';
    evals.flush();
    return r;
  };

  TrainReport report;
  const std::size_t limit = std::min(config.train.iterations, options.stop_after.value_or(config.train.iterations));
  while (trainer.iteration() < limit) {
    report.last = trainer.step();
    const std::size_t count = trainer.iteration();
    metrics << format_metrics_row(count, report.last, config.wall_clock ? std::optional(elapsed()) : std::nullopt)
            << '\n';
    metrics.flush();
    const bool cadence = count % config.eval_every == 0;
    if (!cadence && count != config.train.iterations) continue;
    // Quantizing only at the cadence keeps uninterrupted runs and runs
    // resumed from checkpoint.mrgr on the same trajectory.
    if (cadence) {
      trainer.quantize();
      checkpoint(checkpoint_path);
    }
    report.last_eval = run_evaluation(count);
    if (options.log) {
      *options.log << "iteration " << count << '/' << config.train.iterations
                   << " mean_return=" << format_number(report.last.mean_return)
                   << " loss_q=" << format_number(report.last.loss_q)
                   << " eval_return=" << format_number(report.last_eval->mean_return);
      if (report.last_eval->win_rate) *options.log << " eval_win_rate=" << format_number(*report.last_eval->win_rate);
      *options.log << std::endl;
    }
  }
  report.iterations = trainer.iteration();
  if (report.iterations < config.train.iterations) return report;
  checkpoint(out_dir / "final.mrgr");

  nlohmann::json summary{{"config", config.to_json()}, {"iterations", report.iterations}};
  if (report.last_eval) summary["final_eval"] = report.last_eval->to_json();
  write_json(out_dir / "report.json", summary);
  return report;
}

}  // namespace mrgr::harness
