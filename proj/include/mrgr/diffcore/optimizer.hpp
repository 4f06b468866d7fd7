#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrgr/diffcore/tensor.hpp"

namespace mrgr::diff {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

OptimizerKind parse_optimizer_kind(const std::string& s);
std::string to_string(OptimizerKind k);

// Updates a fixed list of parameter tensors in place. Adam keeps one first-
// and second-moment slot per tensor.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerConfig config, std::vector<Tensor> params);

  // Throws std::runtime_error naming the tensor if any gradient is non-finite;
  // no parameter is modified in that case.
  void step(const Gradients& grads);

  const OptimizerConfig& config() const { return config_; }
  std::vector<Tensor>& params() { return params_; }
  std::uint64_t steps() const { return t_; }
  void set_steps(std::uint64_t t) { t_ = t; }
  const std::vector<Tensor>& params() const { return params_; }
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  OptimizerConfig config_;
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t t_ = 0;
};

}  // namespace mrgr::diff
