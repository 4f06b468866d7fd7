#include "mrgr/envs/env.hpp"

#include <stdexcept>

namespace mrgr::envs {

void EnvSpec::validate() const {
  if (teams < 1 || teams > 2) throw std::invalid_argument(name + ": teams must be 1 or 2");
  if (agents == 0 || actions == 0 || obs_dim == 0 || state_dim == 0 || max_steps == 0) {
    throw std::invalid_argument(name + ": agents, actions, dimensions and length must be positive");
  }
}

std::size_t Env::alive_count(std::size_t team) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < spec().agents; ++i) n += alive(team, i) ? 1 : 0;
  return n;
}

}  // namespace mrgr::envs
