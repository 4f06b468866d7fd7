#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tensor is a cheap handle to a graph node. Values are 64-bit floats.
// Operations on tensors that do not require gradients record nothing, so
// inference-only code (rollouts) pays no graph overhead.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mrgr::diff {

struct Shape {
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

struct Node;

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor row(std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rows() const { return shape().rows; }
  std::size_t cols() const { return shape().cols; }
  std::size_t size() const { return shape().size(); }
  bool requires_grad() const;

  std::span<const double> data() const;
  // Mutable access is for parameter updates only; never mutate a tensor that
  // is part of a live graph you still intend to differentiate.
  std::span<double> mutable_data();

  double item() const;
  double at(std::size_t r, std::size_t c) const;

  const std::string& name() const;
  Tensor& set_name(std::string name);

  // Deep copy of the value; the copy is a fresh leaf.
  Tensor clone(bool requires_grad) const;
  Tensor detach() const { return clone(false); }

  const Node* id() const noexcept { return node_.get(); }

  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Backward closure: receives the upstream gradient of this node and one
// accumulation buffer per parent (nullptr when that parent needs no gradient).
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<std::vector<double>*> grad_in)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  std::string name;
  std::vector<Tensor> parents;
  BackwardFn backward;
};

// While a guard is alive on this thread, operations record no graph even if
// their inputs require gradients. Used for rollouts and evaluation.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled() noexcept;
// True when recording is enabled and some parent requires a gradient.
bool needs_grad(std::initializer_list<const Tensor*> parents);

// Builds a result tensor; records parents and the closure only when some
// parent requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   BackwardFn backward);

class Gradients {
 public:
  // Gradient of the loss with respect to t; zeros when t is unreachable.
  std::vector<double> get(const Tensor& t) const;
  // Empty span when t is unreachable.
  std::span<const double> view(const Tensor& t) const;
  bool contains(const Tensor& t) const { return grads_.contains(t.id()); }
  double norm(std::span<const Tensor> params) const;

  std::unordered_map<const Node*, std::vector<double>>& raw() { return grads_; }

 private:
  std::unordered_map<const Node*, std::vector<double>> grads_;
};

// Reverse sweep from a 1x1 loss. Throws std::invalid_argument for
// non-scalar losses.
Gradients backward(const Tensor& loss);

}  // namespace mrgr::diff
