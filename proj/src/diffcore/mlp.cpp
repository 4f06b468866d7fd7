#include "mrgr/diffcore/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrgr/diffcore/ops.hpp"

namespace mrgr::diff {

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("mlp needs at least 2 widths");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("mlp widths must be positive");
  }
}

namespace {

void check_params(const MlpSpec& spec, std::span<const Tensor> params) {
  spec.validate();
  if (params.size() != 2 * spec.layers()) {
    throw std::invalid_argument("mlp expects " + std::to_string(2 * spec.layers()) +
                                " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const Tensor& w = params[2 * l];
    const Tensor& b = params[2 * l + 1];
    if (w.shape() != Shape{spec.widths[l], spec.widths[l + 1]} ||
        b.shape() != Shape{1, spec.widths[l + 1]}) {
      throw std::invalid_argument("mlp layer " + std::to_string(l) + ": parameter shapes " +
                                  to_string(w.shape()) + "/" + to_string(b.shape()) +
                                  " do not match widths");
    }
  }
}

Tensor activate(const MlpSpec& spec, std::size_t layer, const Tensor& x) {
  if (layer + 1 < spec.layers()) return spec.activation == Activation::tanh ? tanh(x) : relu(x);
  if (spec.output == OutputActivation::softmax) return softmax_rows(x);
  if (spec.output == OutputActivation::sigmoid) return sigmoid(x);
  return x;
}

Tensor forward_after(const MlpSpec& spec, std::span<const Tensor> params, Tensor x,
                     std::size_t first) {
  for (std::size_t l = first; l < spec.layers(); ++l) {
    if (x.cols() != spec.widths[l]) {
      throw std::invalid_argument("mlp layer " + std::to_string(l) + ": input has " +
                                  std::to_string(x.cols()) + " columns, expected " +
                                  std::to_string(spec.widths[l]));
    }
    x = activate(spec, l, add(matmul(x, params[2 * l]), params[2 * l + 1]));
  }
  return x;
}

}  // namespace

Tensor mlp_forward(const MlpSpec& spec, std::span<const Tensor> params, const Tensor& input) {
  check_params(spec, params);
  return forward_after(spec, params, input, 0);
}

Tensor mlp_forward_preactivated(const MlpSpec& spec, std::span<const Tensor> params,
                                const Tensor& first_preactivation) {
  check_params(spec, params);
  if (first_preactivation.cols() != spec.widths[1]) {
    throw std::invalid_argument("mlp layer 0: pre-activation has " +
                                std::to_string(first_preactivation.cols()) +
                                " columns, expected " + std::to_string(spec.widths[1]));
  }
  return forward_after(spec, params, activate(spec, 0, first_preactivation), 1);
}

std::vector<Tensor> init_mlp_params(const MlpSpec& spec, Rng& rng, const std::string& prefix) {
  spec.validate();
  std::vector<Tensor> params;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const std::size_t fan_in = spec.widths[l], fan_out = spec.widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = dist(rng);
    params.push_back(Tensor::from(fan_in, fan_out, std::move(w), true)
                         .set_name(prefix + ".w" + std::to_string(l)));
    params.push_back(
        Tensor::zeros(1, fan_out, true).set_name(prefix + ".b" + std::to_string(l)));
  }
  return params;
}

Mlp::Mlp(MlpSpec spec, Rng& rng, std::string name)
    : spec_(std::move(spec)), name_(std::move(name)) {
  params_ = init_mlp_params(spec_, rng, name_);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

Mlp Mlp::clone() const {
  Mlp m;
  m.spec_ = spec_;
  m.name_ = name_;
  for (const auto& p : params_) m.params_.push_back(p.clone(true));
  return m;
}

Mlp Mlp::clone(const std::string& name) const {
  Mlp m = clone();
  m.name_ = name;
  for (std::size_t l = 0; l < spec_.layers(); ++l) {
    m.params_[2 * l].set_name(name + ".w" + std::to_string(l));
    m.params_[2 * l + 1].set_name(name + ".b" + std::to_string(l));
  }
  return m;
}

void Mlp::copy_from(const Mlp& other) {
  if (other.params_.size() != params_.size()) throw std::invalid_argument("mlp copy mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (other.params_[i].shape() != params_[i].shape()) {
      throw std::invalid_argument("mlp copy shape mismatch in " + params_[i].name());
    }
    auto src = other.params_[i].data();
    std::copy(src.begin(), src.end(), params_[i].mutable_data().begin());
  }
}

void Mlp::set_zero() {
  for (auto& p : params_) std::fill(p.mutable_data().begin(), p.mutable_data().end(), 0.0);
}

}  // namespace mrgr::diff
