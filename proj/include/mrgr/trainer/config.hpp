#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrgr/diffcore/mlp.hpp"
#include "mrgr/diffcore/optimizer.hpp"
#include "mrgr/regret/regret.hpp"

namespace mrgr::trainer {

// vrm: raw observation as the information state, no shaping.
// bvrm: particle-filter information state, no shaping.
// bvrm_shaping: filter plus the global-state shaping term.
// iql, vdn: value-based baselines. arm: per-agent regret losses, no team sum.
enum class Method { vrm, bvrm, bvrm_shaping, iql, vdn, arm };

Method parse_method(const std::string& s);
std::string to_string(Method m);

bool uses_filter(Method m);
bool uses_shaping(Method m);
bool is_value_based(Method m);  // iql, vdn

// Who drives the other team in two-team environments during training.
// self: the learner plays both sides and both traces are used.
enum class TrainOpponent { self, scripted, random };

TrainOpponent parse_train_opponent(const std::string& s);
std::string to_string(TrainOpponent o);

struct TrainConfig {
  Method method = Method::vrm;
  double gamma = 0.99;
  std::size_t k = 4;

  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // of `iterations`
  std::size_t iterations = 5000;

  std::size_t batch_episodes = 32;
  std::size_t tau0_per_episode = 0;  // 0 uses every step of every episode
  std::size_t snapshot_period = 1;   // q_prev <- q
  std::size_t target_period = 100;   // v_target <- v (q target for iql/vdn)

  diff::OptimizerConfig optimizer;
  std::vector<std::size_t> hidden_widths{64, 64};
  std::size_t shaping_width = 64;
  diff::Activation activation = diff::Activation::tanh;

  std::size_t particles = 16;
  std::size_t belief_hidden = 32;
  std::size_t kappa = 32;
  std::size_t filter_width = 64;
  double beta = 0.5;
  bool likelihood_on_propagated = false;
  bool freeze_filter = false;

  regret::SelectMode select_mode = regret::SelectMode::greedy;
  // Bootstrap with gamma^(k + tau0 + 1) instead of gamma^(k + 1).
  bool offset_bootstrap_exponent = false;
  // Feed [kappa | observation] to the q and v networks instead of kappa.
  bool kappa_concat_obs = false;
  bool single_thread = false;
  TrainOpponent opponent = TrainOpponent::self;

  double epsilon_at(std::size_t iteration) const;
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

}  // namespace mrgr::trainer
