#include "mrgr/diffcore/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace mrgr::diff {

OptimizerKind parse_optimizer_kind(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

Optimizer::Optimizer(OptimizerConfig config, std::vector<Tensor> params)
    : config_(config), params_(std::move(params)) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config_.kind == OptimizerKind::adam) {
    for (const auto& p : params_) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
}

void Optimizer::step(const Gradients& grads) {
  for (const auto& p : params_) {
    for (double g : grads.view(p)) {
      if (!std::isfinite(g)) {
        throw std::runtime_error("non-finite gradient for tensor '" + p.name() + "'");
      }
    }
  }
  ++t_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::sgd) {
    for (auto& p : params_) {
      auto g = grads.view(p);
      if (g.empty()) continue;
      auto d = p.mutable_data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= lr * g[i];
    }
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto g = grads.view(params_[k]);
    auto d = params_[k].mutable_data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      d[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace mrgr::diff
