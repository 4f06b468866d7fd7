#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "mrgr/diffcore/tensor.hpp"

namespace mrgr::diff {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise a uniform random subsample of this
  // many coordinates (at least 256 is recommended).
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
  // Denominator floor for |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

using LossFn = std::function<Tensor()>;

// Compares backward() against central differences of loss_fn, perturbing the
// params in place (and restoring them). Throws std::runtime_error if the loss
// is non-finite at any probe.
GradCheckReport grad_check(const LossFn& loss_fn, std::span<Tensor> params,
                           const GradCheckOptions& options = {});

// Same, but checks a caller-supplied analytic gradient.
GradCheckReport grad_check(const LossFn& loss_fn, std::span<Tensor> params,
                           const Gradients& analytic, const GradCheckOptions& options = {});

}  // namespace mrgr::diff
