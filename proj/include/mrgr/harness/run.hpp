#pragma once

// Training and evaluation orchestration.
//
// A training run writes into its output directory:
//   config.json      full run configuration including the seed
//   metrics.csv      one row per iteration (kMetricsHeader)
//   eval.csv         one row per evaluation (kEvalHeader)
//   checkpoint.mrgr  latest checkpoint, refreshed at every evaluation
//   final.mrgr       checkpoint after the last iteration
//   report.json      final metrics and evaluation
// Checkpoints embed the run configuration, so evaluation needs only the file.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrgr/harness/config.hpp"
#include "mrgr/trainer/bundle.hpp"
#include "mrgr/trainer/trainer.hpp"

namespace mrgr::harness {

inline constexpr const char* kMetricsHeader =
    "iteration,wall_seconds,mean_return,win_rate,loss_q,loss_v,epsilon,grad_norm";
inline constexpr const char* kEvalHeader = "iteration,episodes,mean_return,win_rate,opponent";

struct EvalReport {
  std::size_t episodes = 0;
  double mean_return = 0.0;
  std::optional<double> win_rate;  // two-team environments only
  std::vector<double> returns;     // team 0, one per episode
  std::string opponent;

  nlohmann::json to_json() const;
};

// A trained policy restored from a checkpoint.
struct Policy {
  RunConfig config;
  trainer::NetworkBundle bundle;
  std::size_t iteration = 0;
};

Policy load_policy(const std::filesystem::path& checkpoint);

// Who plays team 1 in evaluation.
struct Opponent {
  enum class Kind { self, scripted, random, policy } kind = Kind::scripted;
  const Policy* policy = nullptr;  // Kind::policy only
  std::string label;

  // "self", "scripted", "random", or a checkpoint path (loaded into `storage`).
  static Opponent parse(const std::string& spec, std::optional<Policy>& storage);
};

// Greedy (epsilon = 0, lowest-index ties) play of `learner` as team 0,
// whatever selection mode it was trained with.
// Episode e uses seed derive_seed(seed, e); draws score 0.5.
EvalReport evaluate(const trainer::NetworkBundle& learner, const envs::Env& env,
                    const Opponent& opponent, std::size_t episodes, std::uint64_t seed, bool single_thread);

EvalReport run_eval(const std::filesystem::path& checkpoint, std::size_t episodes, const std::string& opponent,
                    std::uint64_t seed);

struct TrainRunOptions {
  bool resume = false;     // continue from out_dir/checkpoint.mrgr
  // Stop once this many iterations are done, as if interrupted: no
  // final.mrgr or report.json is written.
  std::optional<std::size_t> stop_after;
  std::ostream* log = nullptr;
};

struct TrainReport {
  std::size_t iterations = 0;
  trainer::IterationMetrics last;
  std::optional<EvalReport> last_eval;
};

// Throws before any training if the configuration is invalid or out_dir is
// not writable.
TrainReport run_train(const RunConfig& config, const std::filesystem::path& out_dir,
                      const TrainRunOptions& options = {});

// One metrics.csv row, without the trailing newline.
std::string format_metrics_row(std::size_t iteration, const trainer::IterationMetrics& m,
                               std::optional<double> wall_seconds);
std::string format_number(double v);

}  // namespace mrgr::harness
