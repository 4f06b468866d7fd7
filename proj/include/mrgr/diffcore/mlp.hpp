#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mrgr/diffcore/tensor.hpp"
#include "mrgr/rng.hpp"

namespace mrgr::diff {

enum class Activation { tanh, relu };
enum class OutputActivation { none, softmax, sigmoid };

struct MlpSpec {
  std::vector<std::size_t> widths;  // input, hidden..., output
  Activation activation = Activation::tanh;
  OutputActivation output = OutputActivation::none;

  std::size_t layers() const { return widths.size() - 1; }
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  void validate() const;
};

// Forward pass over a batch (rows) using params laid out as W0, b0, W1, b1, ...
// with W_l of shape widths[l] x widths[l+1] and b_l of shape 1 x widths[l+1].
Tensor mlp_forward(const MlpSpec& spec, std::span<const Tensor> params, const Tensor& input);

// Same network, but starting from a caller-computed first-layer
// pre-activation x*W0 + b0. Lets callers project inputs shared by many rows
// once (e.g. split W0 with slice_rows and broadcast the shared part).
Tensor mlp_forward_preactivated(const MlpSpec& spec, std::span<const Tensor> params,
                                const Tensor& first_preactivation);

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
std::vector<Tensor> init_mlp_params(const MlpSpec& spec, Rng& rng, const std::string& prefix);

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, Rng& rng, std::string name);

  Tensor forward(const Tensor& input) const { return mlp_forward(spec_, params_, input); }

  const MlpSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  std::size_t parameter_count() const;

  // Independent deep copy (for frozen snapshots).
  Mlp clone() const;
  // Deep copy whose parameters are renamed under a new prefix.
  Mlp clone(const std::string& name) const;
  // Overwrites this network's parameter values with other's.
  void copy_from(const Mlp& other);
  void set_zero();

 private:
  MlpSpec spec_;
  std::string name_;
  std::vector<Tensor> params_;
};

}  // namespace mrgr::diff
