#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ctxf/rng.hpp"

namespace ctxf {

// Dimension sizes, row-major layout. An empty shape denotes a scalar.
using Shape = std::vector<int>;

std::int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // sized lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates contributions into inputs' grads.
  std::function<void(Node&)> backward;
  const char* op = "leaf";

  std::vector<float>& ensure_grad();
};

}  // namespace detail

// Dense 32-bit float tensor. A Tensor is a cheap handle onto a node of the
// computation record; node values are treated as immutable once the tensor has
// been consumed by an op. mutable_data() exists for parameter updates between
// training steps.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float v, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar(float v, bool requires_grad = false);
  static Tensor randn(Shape shape, Rng& rng, float stddev,
                      bool requires_grad = false);
  static Tensor uniform(Shape shape, Rng& rng, float lo, float hi,
                        bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->value.size()); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const float> data() const { return node_->value; }
  std::span<float> mutable_data() { return node_->value; }
  std::span<const float> grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  float value() const;          // scalar tensors only
  float at(std::int64_t i) const { return node_->value[static_cast<std::size_t>(i)]; }

  bool all_finite() const;
  Tensor detached_copy(bool requires_grad = false) const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Reverse sweep over the ops recorded beneath a scalar root. Construction
// freezes the visit order (reverse topological); backward() runs it once,
// accumulating additively into every reachable requires_grad tensor.
class GradTape {
 public:
  explicit GradTape(const Tensor& root);
  void backward();
  std::size_t size() const { return order_.size(); }

 private:
  std::shared_ptr<detail::Node> root_;
  std::vector<detail::Node*> order_;  // topological, root last
};

void backward(const Tensor& loss);

// ---- primitive ops ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);   // NumPy-style broadcasting
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor divide(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, float s);
Tensor mul_scalar(const Tensor& a, float s);

Tensor matmul(const Tensor& a, const Tensor& b);  // 2-D only
Tensor transpose(const Tensor& a);                // 2-D only

Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, float slope);
Tensor elu(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

Tensor softmax_rows(const Tensor& a);      // along last axis
Tensor log_softmax_rows(const Tensor& a);  // along last axis
Tensor l2_normalize_rows(const Tensor& a); // along last axis; errors on ~zero rows

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor reshape(const Tensor& a, Shape shape);
Tensor gather_rows(const Tensor& a, const std::vector<int>& rows);  // 2-D

// x: (N,C,H,W); w: (OC,IC,KH,KW); b: (OC) or undefined.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);
Tensor max_pool2d(const Tensor& x, int k, int stride);
Tensor mean_pool2d(const Tensor& x, int k, int stride);
Tensor global_mean_pool(const Tensor& x);  // (N,C,H,W) -> (N,C)

// Anchor-wise alignment loss shared by the KG-contrastive and the supervised
// contrastive objectives. anchors and z are (M, d); labels has length M and
// views of the same source sample carry equal labels. For each anchor i with
// n_i same-label views other than itself:
//   L_i = -1/n_i * sum_{j!=i, y_j=y_i} log softmax_{k!=i}(anchors_i . z_k / tau)_j
// Anchors with n_i = 0 contribute zero. Forward and backward both run in
// double precision internally. The supervised-contrastive form is obtained by
// passing the same tensor as anchors and z (gradients then accumulate through
// both roles).
Tensor alignment_loss(const Tensor& anchors, const Tensor& z,
                      const std::vector<int>& labels, float tau);

// Element-mean of pos_weight-weighted binary cross-entropy on logits, scaled
// by norm. targets must be 0/1 and is treated as a constant.
Tensor weighted_bce_with_logits(const Tensor& logits, const Tensor& targets,
                                float pos_weight, float norm);

}  // namespace ctxf
