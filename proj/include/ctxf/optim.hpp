#pragma once

#include <string>
#include <vector>

#include "ctxf/tensor.hpp"

namespace ctxf {

// Named trainable parameter. Collections of these define what an optimizer
// updates and what a checkpoint stores.
struct Param {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<Param>;

// Adam with bias correction. step() aborts with an error before touching any
// state if a parameter gradient contains a non-finite value, so a poisoned
// update can never be applied silently. Parameters without an accumulated
// gradient are skipped (their step count still advances uniformly).
class Adam {
 public:
  explicit Adam(ParamList params, float lr, float beta1 = 0.9f, float beta2 = 0.999f,
                float eps = 1e-8f);

  void set_lr(float lr) { lr_ = lr; }
  float lr() const { return lr_; }
  void step();
  void zero_grad();
  const ParamList& params() const { return params_; }

 private:
  ParamList params_;
  float lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;  // first/second moments per param
};

// Cosine annealing from base_lr down to decay_rate * base_lr over `epochs`
// steps: lr(e) = floor + (base - floor) * (1 + cos(pi * e / epochs)) / 2.
class CosineSchedule {
 public:
  CosineSchedule(float base_lr, float decay_rate, int epochs);
  float lr_at(int epoch) const;

 private:
  float base_, floor_;
  int epochs_;
};

}  // namespace ctxf
