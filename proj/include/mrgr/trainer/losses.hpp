#pragma once

// Training losses over a batch of (trace, tau0) samples.
//
// Team sums run over the agents alive at tau0. A bootstrap term is added
// only when the bootstrap step exists in the trace (so never past the end
// of an episode, whether it ended by elimination or by the step limit) and
// the agent is still alive there.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mrgr/diffcore/tensor.hpp"
#include "mrgr/trainer/bundle.hpp"
#include "mrgr/trainer/rollout.hpp"

namespace mrgr::trainer {

struct Sample {
  std::size_t trace = 0;
  std::size_t tau0 = 0;
};

// v_target value of `agent` at step `step` of the trace being evaluated.
using ValueFn = std::function<double(std::size_t step, std::size_t agent)>;

// sum_{tau=tau0}^{tau0+k} gamma^(tau-tau0) r_tau + gamma^(k+1) V'(kappa_{tau0+k+1}),
// with the reward sum truncated at the episode end and the bootstrap
// dropped there. `strict_exponent` uses gamma^(k+tau0+1) for the bootstrap.
// Throws std::out_of_range when tau0 is not a step of the trace.
double k_step_advantage(const TeamTrace& trace, std::size_t agent, std::size_t tau0, std::size_t k,
                        double gamma, const ValueFn& v_target, bool strict_exponent = false);

struct LossOutput {
  diff::Tensor loss;          // 1x1, differentiable
  std::vector<double> residual;  // per sample (per row for arm/iql)
};

// Regret increment loss on omega:
//   mean_s 1/2 (sum_i q[a_i] - sum_i q_prev[a_i] - gamma sum_i V'(kappa_{tau0+1}) - r_tau0)^2
// For arm the square is taken per agent and summed over agents.
LossOutput loss_q(const NetworkBundle& bundle, const TrainConfig& config,
                  std::span<const TeamTrace> traces, std::span<const Sample> samples);

// Value loss on theta, xi and lambda:
//   mean_s 1/2 (sum_i A_i(k, tau0) - sum_i v(kappa_tau0) + f(s_tau0))^2
// kappa_tau0 is recomputed from the stored previous belief so the gradient
// reaches lambda through one filter step. For arm the square is per agent
// and f is absent.
LossOutput loss_v(const NetworkBundle& bundle, const TrainConfig& config,
                  std::span<const TeamTrace> traces, std::span<const Sample> samples);

// TD loss for the value-based baselines. iql: per agent
// 1/2 (Q[a] - r - gamma max Q'(next))^2 averaged over agent rows;
// vdn: 1/2 (sum_i Q_i[a_i] - r - gamma sum_i max Q'_i(next))^2 averaged over samples.
LossOutput loss_td(const NetworkBundle& bundle, const TrainConfig& config,
                   std::span<const TeamTrace> traces, std::span<const Sample> samples);

}  // namespace mrgr::trainer
