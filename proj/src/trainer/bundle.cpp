#include "mrgr/trainer/bundle.hpp"

#include "mrgr/diffcore/ops.hpp"
#include "mrgr/rng.hpp"

namespace mrgr::trainer {

NetworkBundle::NetworkBundle(const TrainConfig& config, const envs::EnvSpec& env, std::uint64_t seed)
    : method_(config.method), env_(env) {
  config.validate();
  env.validate();
  has_filter_ = uses_filter(method_);
  has_values_ = !is_value_based(method_);
  has_shaping_ = uses_shaping(method_);
  concat_obs_ = config.kappa_concat_obs;

  // Separate streams per network keep each initialization independent of
  // which other networks a method uses.
  if (has_filter_) {
    Rng rng(derive_seed(seed, 0x10));
    belief::FilterConfig fc;
    fc.obs_dim = env.obs_dim;
    fc.n_actions = env.actions;
    fc.particles = config.particles;
    fc.hidden = config.belief_hidden;
    fc.kappa = config.kappa;
    fc.net_width = config.filter_width;
    fc.beta = config.beta;
    fc.activation = config.activation;
    fc.likelihood_on_propagated = config.likelihood_on_propagated;
    filter = belief::FilterNets(fc, rng, "filter");
  }

  auto widths = [&](std::size_t in, std::size_t out) {
    std::vector<std::size_t> w{in};
    w.insert(w.end(), config.hidden_widths.begin(), config.hidden_widths.end());
    w.push_back(out);
    return w;
  };
  {
    Rng rng(derive_seed(seed, 0x11));
    q = diff::Mlp({widths(input_dim(), env.actions), config.activation, diff::OutputActivation::none}, rng, "q");
    q_prev = q.clone("q_prev");
  }
  if (has_values_) {
    Rng rng(derive_seed(seed, 0x12));
    v = diff::Mlp({widths(input_dim(), 1), config.activation, diff::OutputActivation::none}, rng, "v");
    v_target = v.clone("v_target");
  }
  if (has_shaping_) {
    Rng rng(derive_seed(seed, 0x13));
    shaping = diff::Mlp({{env.state_dim, config.shaping_width, 1}, config.activation,
                         diff::OutputActivation::none},
                        rng, "shaping");
  }
}

std::size_t NetworkBundle::kappa_dim() const {
  return has_filter_ ? filter.config().kappa : env_.obs_dim;
}

std::size_t NetworkBundle::input_dim() const {
  return kappa_dim() + (concat_obs_ ? env_.obs_dim : 0);
}

diff::Tensor NetworkBundle::input_rows(const diff::Tensor& kappa, const diff::Tensor& obs) const {
  if (!concat_obs_) return kappa;
  const diff::Tensor parts[] = {kappa, obs};
  return diff::concat_cols(parts);
}

std::vector<diff::Tensor> NetworkBundle::all_params() const {
  std::vector<diff::Tensor> out;
  auto add = [&](const std::vector<diff::Tensor>& p) { out.insert(out.end(), p.begin(), p.end()); };
  add(q.params());
  add(q_prev.params());
  if (has_values_) {
    add(v.params());
    add(v_target.params());
  }
  if (has_shaping_) add(shaping.params());
  if (has_filter_) add(filter.params());
  return out;
}

std::vector<diff::Tensor> NetworkBundle::v_group_params(bool include_filter) const {
  std::vector<diff::Tensor> out;
  if (!has_values_) return out;
  out = v.params();
  if (has_shaping_) out.insert(out.end(), shaping.params().begin(), shaping.params().end());
  if (has_filter_ && include_filter) {
    const auto f = filter.params();
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

}  // namespace mrgr::trainer
