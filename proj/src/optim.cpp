#include "ctxf/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ctxf {

Adam::Adam(ParamList params, float lr, float beta1, float beta2, float eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    std::size_t n = static_cast<std::size_t>(params_[i].tensor.numel());
    m_[i].assign(n, 0.0f);
    v_[i].assign(n, 0.0f);
  }
}

void Adam::step() {
  for (const Param& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (float g : p.tensor.grad())
      if (!std::isfinite(g))
        throw std::runtime_error("adam: non-finite gradient in parameter '" + p.name + "'");
  }
  ++t_;
  double bc1 = 1.0 - std::pow(static_cast<double>(beta1_), static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(static_cast<double>(beta2_), static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i].tensor;
    if (!t.has_grad()) continue;
    auto w = t.mutable_data();
    auto g = t.grad();
    float* m = m_[i].data();
    float* v = v_[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0f - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0f - beta2_) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      w[j] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

void Adam::zero_grad() {
  for (Param& p : params_) p.tensor.zero_grad();
}

CosineSchedule::CosineSchedule(float base_lr, float decay_rate, int epochs)
    : base_(base_lr), floor_(base_lr * decay_rate), epochs_(epochs) {
  if (epochs < 1) throw std::invalid_argument("cosine schedule: epochs must be >= 1");
}

float CosineSchedule::lr_at(int epoch) const {
  double phase = std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(epochs_));
  return static_cast<float>(floor_ + (base_ - floor_) * 0.5 * (1.0 + phase));
}

}  // namespace ctxf
