#include "mrgr/diffcore/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace mrgr::diff {

std::string to_string(const Shape& s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

namespace {

std::shared_ptr<Node> leaf(Shape shape, std::vector<double> value, bool requires_grad) {
  if (shape.rows == 0 || shape.cols == 0) {
    throw std::invalid_argument("tensor dimensions must be positive, got " + to_string(shape));
  }
  if (value.size() != shape.size()) {
    throw std::invalid_argument("tensor data has " + std::to_string(value.size()) +
                                " elements, shape " + to_string(shape) + " needs " +
                                std::to_string(shape.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

const Node& deref(const std::shared_ptr<Node>& n) {
  if (!n) throw std::logic_error("use of an undefined tensor");
  return *n;
}

}  // namespace

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor(leaf({rows, cols}, std::vector<double>(rows * cols, 0.0), requires_grad));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data,
                    bool requires_grad) {
  return Tensor(leaf({rows, cols}, std::move(data), requires_grad));
}

Tensor Tensor::row(std::vector<double> data, bool requires_grad) {
  const std::size_t n = data.size();
  return Tensor(leaf({1, n}, std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor(leaf({1, 1}, {v}, requires_grad));
}

const Shape& Tensor::shape() const { return deref(node_).shape; }
bool Tensor::requires_grad() const { return deref(node_).requires_grad; }
std::span<const double> Tensor::data() const { return deref(node_).value; }
std::span<double> Tensor::mutable_data() {
  deref(node_);
  return node_->value;
}

double Tensor::item() const {
  const Node& n = deref(node_);
  if (n.shape.size() != 1) {
    throw std::invalid_argument("item() on non-scalar tensor of shape " + to_string(n.shape));
  }
  return n.value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  const Node& n = deref(node_);
  if (r >= n.shape.rows || c >= n.shape.cols) throw std::out_of_range("tensor index");
  return n.value[r * n.shape.cols + c];
}

const std::string& Tensor::name() const { return deref(node_).name; }

Tensor& Tensor::set_name(std::string name) {
  deref(node_);
  node_->name = std::move(name);
  return *this;
}

Tensor Tensor::clone(bool requires_grad) const {
  const Node& n = deref(node_);
  Tensor t(leaf(n.shape, n.value, requires_grad));
  t.node_->name = n.name;
  return t;
}

namespace {
thread_local int no_grad_depth = 0;
}  // namespace

NoGradGuard::NoGradGuard() { ++no_grad_depth; }
NoGradGuard::~NoGradGuard() { --no_grad_depth; }

bool grad_enabled() noexcept { return no_grad_depth == 0; }

bool needs_grad(std::initializer_list<const Tensor*> parents) {
  if (!grad_enabled()) return false;
  for (const Tensor* p : parents)
    if (p->requires_grad()) return true;
  return false;
}

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(value);
  if (grad_enabled()) {
    for (const auto& p : parents) {
      if (p.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

std::vector<double> Gradients::get(const Tensor& t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) return std::vector<double>(t.size(), 0.0);
  return it->second;
}

std::span<const double> Gradients::view(const Tensor& t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) return {};
  return it->second;
}

double Gradients::norm(std::span<const Tensor> params) const {
  double s = 0.0;
  for (const auto& p : params) {
    for (double g : view(p)) s += g * g;
  }
  return std::sqrt(s);
}

Gradients backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward on undefined tensor");
  if (loss.size() != 1) {
    throw std::invalid_argument("backward needs a scalar loss, got shape " +
                                to_string(loss.shape()));
  }
  Gradients out;
  if (!loss.requires_grad()) return out;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.id());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].node().get();
      if (p->requires_grad && !seen.contains(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  auto& grads = out.raw();
  grads[loss.id()] = {1.0};
  std::vector<std::vector<double>*> slots;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward) continue;
    auto g = grads.find(node);
    if (g == grads.end()) continue;
    slots.assign(node->parents.size(), nullptr);
    for (std::size_t i = 0; i < node->parents.size(); ++i) {
      Node* p = node->parents[i].node().get();
      if (!p->requires_grad) continue;
      auto& buf = grads[p];
      if (buf.empty()) buf.assign(p->shape.size(), 0.0);
      slots[i] = &buf;
    }
    // rehashing above may have moved the bucket but not the vector storage
    const std::vector<double>& upstream = grads.at(node);
    node->backward(upstream, slots);
  }
  // Interior nodes are not interesting to callers; keep leaves only.
  for (auto it = grads.begin(); it != grads.end();) {
    if (!it->first->parents.empty()) {
      it = grads.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

}  // namespace mrgr::diff
