#include "ctxf/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ctxf {

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape has non-positive dimension " + std::to_string(d));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace detail {

std::vector<float>& Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
  return grad;
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::full(Shape shape, float v, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  std::int64_t count = numel_of(shape);
  n->shape = std::move(shape);
  n->value.assign(static_cast<std::size_t>(count), v);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  std::int64_t count = numel_of(shape);
  if (count != static_cast<std::int64_t>(data.size()))
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(float v, bool requires_grad) {
  return from_data(Shape{}, {v}, requires_grad);
}

Tensor Tensor::randn(Shape shape, Rng& rng, float stddev, bool requires_grad) {
  std::int64_t count = numel_of(shape);
  std::vector<float> data(static_cast<std::size_t>(count));
  for (auto& x : data) x = stddev * rng.normal();
  return from_data(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::uniform(Shape shape, Rng& rng, float lo, float hi, bool requires_grad) {
  std::int64_t count = numel_of(shape);
  std::vector<float> data(static_cast<std::size_t>(count));
  for (auto& x : data) x = rng.uniform(lo, hi);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

std::span<const float> Tensor::grad() const {
  if (node_->grad.empty())
    throw std::runtime_error("tensor has no gradient (backward not run or requires_grad is false)");
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

float Tensor::value() const {
  if (numel() != 1)
    throw std::runtime_error("value() called on non-scalar tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

bool Tensor::all_finite() const {
  for (float v : node_->value)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::detached_copy(bool requires_grad) const {
  return Tensor::from_data(shape(), std::vector<float>(node_->value), requires_grad);
}

GradTape::GradTape(const Tensor& root) : root_(root.node()) {
  if (root.numel() != 1)
    throw std::runtime_error("backward requires a scalar loss, got shape " + shape_str(root.shape()));
  // Iterative postorder DFS; order_ ends up topological with the root last.
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root_.get(), 0);
  visited.insert(root_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

void GradTape::backward() {
  root_->ensure_grad()[0] += 1.0f;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

void backward(const Tensor& loss) {
  GradTape tape(loss);
  tape.backward();
}

}  // namespace ctxf
