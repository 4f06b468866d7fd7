#include "mrgr/belief/filter.hpp"

#include <cmath>
#include <stdexcept>

#include "mrgr/diffcore/ops.hpp"

namespace mrgr::belief {

using diff::Tensor;

void FilterConfig::validate() const {
  if (obs_dim == 0) throw std::invalid_argument("filter: obs_dim must be positive");
  if (n_actions == 0) throw std::invalid_argument("filter: n_actions must be positive");
  if (particles < 1) throw std::invalid_argument("filter: need at least one particle");
  if (hidden == 0 || kappa == 0 || net_width == 0) {
    throw std::invalid_argument("filter: hidden, kappa and net_width must be positive");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("filter: beta must lie in [0, 1]");
}

Belief Belief::select(std::size_t b) const {
  const std::size_t x = particles();
  return {diff::slice_rows(hidden, b * x, (b + 1) * x), diff::slice_rows(weights, b, b + 1)};
}

Belief init_belief(std::size_t count, std::size_t particles, std::size_t hidden,
                   std::span<const double> b1) {
  if (particles < 1) throw std::invalid_argument("init_belief: need at least one particle");
  if (count < 1) throw std::invalid_argument("init_belief: need at least one belief");
  if (!b1.empty() && b1.size() != hidden) {
    throw std::invalid_argument("init_belief: b1 has width " + std::to_string(b1.size()) +
                                ", expected " + std::to_string(hidden));
  }
  std::vector<double> h(count * particles * hidden, 0.0);
  if (!b1.empty()) {
    for (std::size_t r = 0; r < count * particles; ++r)
      std::copy(b1.begin(), b1.end(), h.begin() + static_cast<std::ptrdiff_t>(r * hidden));
  }
  std::vector<double> w(count * particles, 1.0 / static_cast<double>(particles));
  return {Tensor::from(count * particles, hidden, std::move(h)),
          Tensor::from(count, particles, std::move(w))};
}

Belief concat_beliefs(std::span<const Belief> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_beliefs: no inputs");
  std::vector<Tensor> hs, ws;
  for (const auto& p : parts) {
    if (p.particles() != parts[0].particles()) {
      throw std::invalid_argument("concat_beliefs: particle counts differ");
    }
    hs.push_back(p.hidden);
    ws.push_back(p.weights);
  }
  return {diff::concat_rows(hs), diff::concat_rows(ws)};
}

Tensor soft_resample(const Tensor& weights, const Tensor& likelihoods, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("soft_resample: beta must lie in [0, 1], got " + std::to_string(beta));
  }
  if (weights.shape() != likelihoods.shape()) {
    throw std::invalid_argument("soft_resample: weights " + to_string(weights.shape()) +
                                " vs likelihoods " + to_string(likelihoods.shape()));
  }
  const double x = static_cast<double>(weights.cols());
  const Tensor lw = diff::mul(likelihoods, weights);
  const Tensor num = diff::add_scalar(diff::scale(lw, beta), (1.0 - beta) / x);
  const Tensor den = diff::add_scalar(diff::scale(diff::sum_cols(lw), beta), 1.0 - beta);
  return diff::div(num, den);
}

Tensor summarize(const Belief& belief) {
  const std::size_t b = belief.count(), x = belief.particles();
  const Tensor w_col = diff::reshape(belief.weights, b * x, 1);
  const Tensor mean = diff::sum_row_blocks(diff::mul(belief.hidden, w_col), x);
  const Tensor parts[] = {mean, diff::entropy_rows(belief.weights)};
  return diff::concat_cols(parts);
}

namespace {

// Row index list that repeats each of `count` rows `times` times.
std::vector<std::size_t> repeat_index(std::size_t count, std::size_t times) {
  std::vector<std::size_t> idx(count * times);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i / times;
  return idx;
}

}  // namespace

FilterNets::FilterNets(FilterConfig config, Rng& rng, const std::string& prefix)
    : config_(config) {
  config_.validate();
  const auto& c = config_;
  t_ = diff::Mlp({{c.hidden + c.n_actions + c.obs_dim, c.net_width, c.hidden}, c.activation,
                  diff::OutputActivation::none},
                 rng, prefix + ".T");
  z_ = diff::Mlp({{c.obs_dim + c.hidden, c.net_width, 1}, c.activation, diff::OutputActivation::none},
                 rng, prefix + ".Z");
  g_ = diff::Mlp({{c.obs_dim + c.hidden + 1, c.net_width, c.kappa}, c.activation,
                  diff::OutputActivation::none},
                 rng, prefix + ".G");
}

void FilterNets::check_inputs(const Belief& belief, const Tensor& obs, const char* op) const {
  if (belief.hidden_width() != config_.hidden) {
    throw std::invalid_argument(std::string(op) + ": belief hidden width " +
                                std::to_string(belief.hidden_width()) + ", expected " +
                                std::to_string(config_.hidden));
  }
  if (belief.hidden.rows() != belief.count() * belief.particles()) {
    throw std::invalid_argument(std::string(op) + ": belief hidden/weights shapes disagree");
  }
  if (obs.rows() != belief.count() || obs.cols() != config_.obs_dim) {
    throw std::invalid_argument(std::string(op) + ": observation shape " + to_string(obs.shape()) +
                                ", expected " + std::to_string(belief.count()) + "x" +
                                std::to_string(config_.obs_dim));
  }
}

Tensor FilterNets::propagate(const Belief& belief, const Tensor& prev_action,
                             const Tensor& obs) const {
  check_inputs(belief, obs, "propagate");
  if (prev_action.rows() != belief.count() || prev_action.cols() != config_.n_actions) {
    throw std::invalid_argument("propagate: action shape " + to_string(prev_action.shape()) +
                                ", expected " + std::to_string(belief.count()) + "x" +
                                std::to_string(config_.n_actions));
  }
  // First layer split as [hidden | action | obs] so the per-agent part is
  // projected once and broadcast to that agent's particles.
  const auto& p = t_.params();
  const std::size_t h = config_.hidden;
  const Tensor shared_in[] = {prev_action, obs};
  const Tensor shared = diff::matmul(diff::concat_cols(shared_in), diff::slice_rows(p[0], h, p[0].rows()));
  const auto idx = repeat_index(belief.count(), belief.particles());
  const Tensor pre = diff::add(diff::add(diff::matmul(belief.hidden, diff::slice_rows(p[0], 0, h)),
                                         diff::gather_rows(shared, idx)),
                               p[1]);
  return diff::tanh(diff::mlp_forward_preactivated(t_.spec(), p, pre));
}

Tensor FilterNets::likelihoods(const Tensor& obs, const Tensor& hiddens) const {
  const std::size_t b = obs.rows();
  if (b == 0 || hiddens.rows() % b != 0 || hiddens.cols() != config_.hidden ||
      obs.cols() != config_.obs_dim) {
    throw std::invalid_argument("likelihoods: observation " + to_string(obs.shape()) +
                                " does not match hiddens " + to_string(hiddens.shape()));
  }
  const std::size_t x = hiddens.rows() / b;
  // First layer split as [obs | hidden], as in propagate.
  const auto& p = z_.params();
  const std::size_t o = config_.obs_dim;
  const Tensor shared = diff::matmul(obs, diff::slice_rows(p[0], 0, o));
  const Tensor pre = diff::add(diff::add(diff::matmul(hiddens, diff::slice_rows(p[0], o, p[0].rows())),
                                         diff::gather_rows(shared, repeat_index(b, x))),
                               p[1]);
  const Tensor logit = diff::mlp_forward_preactivated(z_.spec(), p, pre);
  for (double v : logit.data()) {
    if (!std::isfinite(v)) throw std::runtime_error("likelihoods: non-finite likelihood");
  }
  static const double lo = std::log(kLikelihoodMin), hi = std::log(kLikelihoodMax);
  return diff::reshape(diff::exp(diff::clamp(logit, lo, hi)), b, x);
}

Tensor FilterNets::compress(const Tensor& obs, const Belief& belief) const {
  check_inputs(belief, obs, "compress");
  const Tensor parts[] = {obs, summarize(belief)};
  return g_.forward(diff::concat_cols(parts));
}

UpdateResult FilterNets::update(const Belief& belief, const Tensor& prev_action,
                                const Tensor& obs) const {
  return update(belief, prev_action, obs, config_.beta);
}

UpdateResult FilterNets::update(const Belief& belief, const Tensor& prev_action, const Tensor& obs,
                                double beta) const {
  const Tensor h = propagate(belief, prev_action, obs);
  const Tensor l = likelihoods(obs, config_.likelihood_on_propagated ? h : belief.hidden);
  Belief next{h, soft_resample(belief.weights, l, beta)};
  Tensor kappa = compress(obs, next);
  return {std::move(kappa), std::move(next)};
}

std::vector<Tensor> FilterNets::params() const {
  std::vector<Tensor> out;
  for (const diff::Mlp* m : {&t_, &z_, &g_})
    out.insert(out.end(), m->params().begin(), m->params().end());
  return out;
}

FilterNets FilterNets::clone() const {
  FilterNets f;
  f.config_ = config_;
  f.t_ = t_.clone();
  f.z_ = z_.clone();
  f.g_ = g_.clone();
  return f;
}

void FilterNets::copy_from(const FilterNets& other) {
  t_.copy_from(other.t_);
  z_.copy_from(other.z_);
  g_.copy_from(other.g_);
}

UpdateResult belief_update(const FilterNets& nets, const Belief& belief, const Tensor& prev_action,
                           const Tensor& obs, double beta) {
  return nets.update(belief, prev_action, obs, beta);
}

Tensor one_hot_rows(std::span<const std::size_t> actions, std::size_t n_actions) {
  std::vector<double> v(actions.size() * n_actions, 0.0);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] > n_actions) throw std::out_of_range("one_hot_rows: action out of range");
    if (actions[i] < n_actions) v[i * n_actions + actions[i]] = 1.0;
  }
  return Tensor::from(actions.size(), n_actions, std::move(v));
}

}  // namespace mrgr::belief
