#pragma once

// Iteration loop: collect a batch of fresh episodes with the current
// parameters, update q (and v, shaping, filter), refresh snapshots.
//
// There is no persistent random state: every random draw in iteration t is
// derived from (seed, t), so a trainer restored from a checkpoint continues
// exactly where the original left off.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mrgr/diffcore/checkpoint.hpp"
#include "mrgr/diffcore/optimizer.hpp"
#include "mrgr/envs/env.hpp"
#include "mrgr/trainer/bundle.hpp"
#include "mrgr/trainer/config.hpp"
#include "mrgr/trainer/losses.hpp"
#include "mrgr/trainer/rollout.hpp"

namespace mrgr::trainer {

struct IterationMetrics {
  std::size_t iteration = 0;  // 0-based index of the finished iteration
  double mean_return = 0.0;
  std::optional<double> win_rate;  // two-team environments only
  double loss_q = 0.0;
  std::optional<double> loss_v;  // regret methods only
  double epsilon = 0.0;
  double grad_norm = 0.0;
};

// 1 for a team-0 elimination win, 0 for a loss, 0.5 for a draw.
double win_score(int winner, std::size_t team = 0);

class Trainer {
 public:
  Trainer(TrainConfig config, const envs::Env& prototype, std::uint64_t seed);

  const TrainConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t iteration() const { return iteration_; }
  NetworkBundle& bundle() { return bundle_; }
  const NetworkBundle& bundle() const { return bundle_; }
  const envs::Env& env() const { return *env_; }

  // Plays the batch of iteration `it` with the current parameters.
  std::vector<EpisodeResult> collect(std::size_t it) const;
  // Start steps for the losses: every step, or tau0_per_episode draws per trace.
  std::vector<Sample> sample(std::span<const TeamTrace> traces, std::size_t it) const;
  // Optimizer steps on one batch, then the iteration counter advances and
  // snapshots refresh on schedule. Throws std::runtime_error on a non-finite loss.
  IterationMetrics update(std::span<const TeamTrace> traces, std::span<const Sample> samples);
  // collect + sample + update.
  IterationMetrics step();

  // Rounds parameters and optimizer moments to float32 so that a checkpoint
  // written now restores this exact state.
  void quantize();
  diff::CheckpointFile to_checkpoint() const;
  // Throws std::runtime_error on missing arrays or shape mismatch.
  void restore(const diff::CheckpointFile& file);

 private:
  TrainConfig config_;
  std::uint64_t seed_;
  std::unique_ptr<envs::Env> env_;
  NetworkBundle bundle_;
  diff::Optimizer opt_q_, opt_v_;
  std::size_t iteration_ = 0;
};

// Loads every parameter array of `bundle` from a checkpoint by name.
void load_params(NetworkBundle& bundle, const diff::CheckpointFile& file);

}  // namespace mrgr::trainer
