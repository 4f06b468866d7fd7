#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mrgr::envs {

struct EnvSpec {
  std::string name;
  std::size_t teams = 1;
  std::size_t agents = 0;  // per team
  std::size_t actions = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::size_t max_steps = 0;

  void validate() const;
};

// One action vector per team, one entry per agent. Entries for dead agents
// are ignored.
using JointActions = std::vector<std::vector<std::size_t>>;

struct StepOutcome {
  std::vector<double> rewards;  // per team
  bool done = false;
};

// Dec-POMDP environment with one or two teams. Each team receives one shared
// reward per step. Observations are agent-local; the global state is only
// meant for centralized training.
class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual StepOutcome step(const JointActions& actions) = 0;
  virtual bool done() const = 0;
  virtual std::size_t steps_taken() const = 0;

  virtual std::vector<double> observe(std::size_t team, std::size_t agent) const = 0;
  virtual std::vector<double> state(std::size_t team) const = 0;
  virtual bool alive(std::size_t team, std::size_t agent) const = 0;

  virtual std::unique_ptr<Env> clone() const = 0;

  std::size_t alive_count(std::size_t team) const;
};

}  // namespace mrgr::envs
