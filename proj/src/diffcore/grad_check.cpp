#include "mrgr/diffcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mrgr/rng.hpp"

namespace mrgr::diff {
namespace {

double finite_loss(const LossFn& loss_fn) {
  const double v = loss_fn().item();
  if (!std::isfinite(v)) throw std::runtime_error("grad_check: loss is not finite");
  return v;
}

}  // namespace

GradCheckReport grad_check(const LossFn& loss_fn, std::span<Tensor> params,
                           const GradCheckOptions& options) {
  const Tensor loss = loss_fn();
  if (!std::isfinite(loss.item())) throw std::runtime_error("grad_check: loss is not finite");
  const Gradients g = backward(loss);
  return grad_check(loss_fn, params, g, options);
}

GradCheckReport grad_check(const LossFn& loss_fn, std::span<Tensor> params,
                           const Gradients& analytic, const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].size(); ++i) coords.emplace_back(p, i);
  if (options.max_coordinates > 0 && coords.size() > options.max_coordinates) {
    Rng rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coordinates);
  }

  std::vector<std::vector<double>> grads;
  for (const auto& t : params) grads.push_back(analytic.get(t));

  GradCheckReport report;
  for (auto [p, i] : coords) {
    const std::vector<double>& ga = grads[p];
    auto d = params[p].mutable_data();
    const double orig = d[i];
    d[i] = orig + options.step;
    const double fp = finite_loss(loss_fn);
    d[i] = orig - options.step;
    const double fm = finite_loss(loss_fn);
    d[i] = orig;
    const double numeric = (fp - fm) / (2.0 * options.step);
    const double a = ga[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.coordinates_checked;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_tensor = params[p].name();
      report.worst_index = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace mrgr::diff
