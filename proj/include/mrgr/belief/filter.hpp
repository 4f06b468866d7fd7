#pragma once

// Differentiable particle-filter belief tracker.
//
// Beliefs are batched: a Belief holds B independent particle sets (one per
// agent), each with X particles of hidden width H.
//   hidden  : (B*X) x H, rows b*X .. b*X+X-1 belong to belief b
//   weights : B x X, each row sums to 1
// All operations accept and return batched tensors so a whole team is
// updated with one pass through each network.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrgr/diffcore/mlp.hpp"
#include "mrgr/diffcore/tensor.hpp"
#include "mrgr/rng.hpp"

namespace mrgr::belief {

struct FilterConfig {
  std::size_t obs_dim = 0;
  std::size_t n_actions = 0;
  std::size_t particles = 16;  // X
  std::size_t hidden = 32;     // H
  std::size_t kappa = 32;      // K
  std::size_t net_width = 64;  // hidden layer width of T, Z and G
  double beta = 0.5;
  diff::Activation activation = diff::Activation::tanh;
  // Score likelihoods on the propagated hidden h_t instead of h_{t-1}.
  bool likelihood_on_propagated = false;

  void validate() const;
};

// Likelihood head range.
inline constexpr double kLikelihoodMin = 1e-6;
inline constexpr double kLikelihoodMax = 1e6;

struct Belief {
  diff::Tensor hidden;
  diff::Tensor weights;

  std::size_t count() const { return weights.rows(); }
  std::size_t particles() const { return weights.cols(); }
  std::size_t hidden_width() const { return hidden.cols(); }
  // Copy of belief b as a batch of one.
  Belief select(std::size_t b) const;
  Belief detach() const { return {hidden.detach(), weights.detach()}; }
};

// B beliefs whose particles all carry hidden = b1 (zeros when b1 is empty)
// and uniform weights. Throws std::invalid_argument when X < 1 or b1 has the
// wrong width.
Belief init_belief(std::size_t count, std::size_t particles, std::size_t hidden,
                   std::span<const double> b1 = {});

// Stacks beliefs along the batch dimension.
Belief concat_beliefs(std::span<const Belief> parts);

// w' = (beta L w + (1 - beta)/X) / (beta sum(L w) + (1 - beta)), row-wise.
// Throws std::invalid_argument for beta outside [0, 1] or shape mismatch.
diff::Tensor soft_resample(const diff::Tensor& weights, const diff::Tensor& likelihoods,
                           double beta);

// Weighted mean of each belief's hidden vectors, followed by the weight
// entropy: B x (H + 1).
diff::Tensor summarize(const Belief& belief);

struct UpdateResult {
  diff::Tensor kappa;  // B x K
  Belief belief;
};

class FilterNets {
 public:
  FilterNets() = default;
  FilterNets(FilterConfig config, Rng& rng, const std::string& prefix = "filter");

  // New hidden per particle: T(h, a_prev, o), tanh-squashed. (B*X) x H.
  diff::Tensor propagate(const Belief& belief, const diff::Tensor& prev_action,
                         const diff::Tensor& obs) const;
  // Z(o, h) for each particle row of `hiddens`, positive: B x X.
  diff::Tensor likelihoods(const diff::Tensor& obs, const diff::Tensor& hiddens) const;
  // G(o, summarize(belief)): B x K.
  diff::Tensor compress(const diff::Tensor& obs, const Belief& belief) const;

  // propagate -> likelihoods -> soft_resample -> compress.
  UpdateResult update(const Belief& belief, const diff::Tensor& prev_action,
                      const diff::Tensor& obs) const;
  UpdateResult update(const Belief& belief, const diff::Tensor& prev_action,
                      const diff::Tensor& obs, double beta) const;

  const FilterConfig& config() const { return config_; }
  diff::Mlp& transition() { return t_; }
  diff::Mlp& likelihood() { return z_; }
  diff::Mlp& generator() { return g_; }
  const diff::Mlp& transition() const { return t_; }
  const diff::Mlp& likelihood() const { return z_; }
  const diff::Mlp& generator() const { return g_; }

  // T, Z and G parameters in that order.
  std::vector<diff::Tensor> params() const;
  FilterNets clone() const;
  void copy_from(const FilterNets& other);

 private:
  void check_inputs(const Belief& belief, const diff::Tensor& obs, const char* op) const;

  FilterConfig config_;
  diff::Mlp t_, z_, g_;
};

// Free-function form of FilterNets::update.
UpdateResult belief_update(const FilterNets& nets, const Belief& belief,
                           const diff::Tensor& prev_action, const diff::Tensor& obs, double beta);

// One-hot rows for a batch of actions: B x n_actions. A value equal to
// n_actions encodes "no previous action" as an all-zero row.
diff::Tensor one_hot_rows(std::span<const std::size_t> actions, std::size_t n_actions);

}  // namespace mrgr::belief
