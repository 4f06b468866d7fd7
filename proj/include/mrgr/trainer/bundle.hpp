#pragma once

// All networks of one learner, shared by every agent it controls.
//
//   q        (omega)   input -> per-action accumulated regret
//   q_prev             frozen copy of q from the previous iteration; for the
//                      value-based baselines, the Q target network
//   v        (theta)   input -> scalar value
//   v_target (theta')  frozen copy of v
//   shaping  (xi)      global state -> scalar c(s)
//   filter   (lambda)  belief tracker producing kappa
//
// "input" is kappa, optionally concatenated with the raw observation. For
// methods without a filter, kappa is the raw observation.

#include <cstdint>
#include <string>
#include <vector>

#include "mrgr/belief/filter.hpp"
#include "mrgr/diffcore/mlp.hpp"
#include "mrgr/envs/env.hpp"
#include "mrgr/trainer/config.hpp"

namespace mrgr::trainer {

class NetworkBundle {
 public:
  NetworkBundle() = default;
  NetworkBundle(const TrainConfig& config, const envs::EnvSpec& env, std::uint64_t seed);

  Method method() const { return method_; }
  const envs::EnvSpec& env() const { return env_; }
  bool has_filter() const { return has_filter_; }
  bool has_values() const { return has_values_; }
  bool has_shaping() const { return has_shaping_; }
  bool concat_obs() const { return concat_obs_; }

  std::size_t kappa_dim() const;
  std::size_t input_dim() const;
  // Network input rows from kappa rows and observation rows.
  diff::Tensor input_rows(const diff::Tensor& kappa, const diff::Tensor& obs) const;

  diff::Mlp q, q_prev, v, v_target, shaping;
  belief::FilterNets filter;

  void snapshot_q() { q_prev.copy_from(q); }
  void sync_v_target() { v_target.copy_from(v); }

  // Every parameter tensor, trainable or frozen, in a fixed order.
  std::vector<diff::Tensor> all_params() const;
  std::vector<diff::Tensor> q_params() const { return q.params(); }
  // theta, xi and (unless frozen) lambda.
  std::vector<diff::Tensor> v_group_params(bool include_filter) const;

 private:
  Method method_ = Method::vrm;
  envs::EnvSpec env_;
  bool has_filter_ = false, has_values_ = false, has_shaping_ = false, concat_obs_ = false;
};

}  // namespace mrgr::trainer
