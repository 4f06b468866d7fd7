#pragma once

// Run configuration: an INI file with [run], [train], [matrix] and [battle]
// sections. Every key is optional and falls back to the defaults below;
// unknown keys are rejected so that typos do not silently train the wrong
// thing. README.md lists every key.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "json.hpp"
#include "mrgr/envs/battle.hpp"
#include "mrgr/envs/env.hpp"
#include "mrgr/envs/matrix_game.hpp"
#include "mrgr/trainer/config.hpp"

namespace mrgr::harness {

enum class EnvKind { matrix, battle };

EnvKind parse_env_kind(const std::string& s);
std::string to_string(EnvKind k);

struct RunConfig {
  EnvKind env = EnvKind::matrix;
  trainer::TrainConfig train;
  envs::Payoffs payoffs = envs::Payoffs::canonical();
  std::string payoff_file;  // informational; payoffs holds the loaded values
  envs::BattleConfig battle;
  std::uint64_t seed = 0;
  std::size_t eval_every = 50;
  std::size_t eval_episodes = 50;
  std::string eval_opponent = "scripted";  // battle: self | scripted | random
  bool wall_clock = false;                 // fill wall_seconds in metrics.csv

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// Parse errors name the offending section.key. Relative payoff paths are
// resolved against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

std::unique_ptr<envs::Env> make_env(const RunConfig& config);

}  // namespace mrgr::harness
