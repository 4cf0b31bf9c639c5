#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctxf/tensor.hpp"

namespace ctxf {
namespace {

using detail::Node;

Tensor make_result(Shape shape, std::vector<float> value, std::vector<Tensor> inputs,
                   const char* op, std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  if (numel_of(shape) != static_cast<std::int64_t>(value.size()))
    throw std::logic_error(std::string(op) + ": internal result size mismatch");
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  bool needs_grad = false;
  for (const Tensor& t : inputs) needs_grad = needs_grad || t.requires_grad();
  n->requires_grad = needs_grad;
  if (needs_grad) {
    for (const Tensor& t : inputs) n->inputs.push_back(t.node());
    n->backward = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

void check_rank(const Tensor& t, int rank, const char* op) {
  if (t.rank() != rank)
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                " tensor, got shape " + shape_str(t.shape()));
}

// ---- broadcasting -----------------------------------------------------------

struct Bcast {
  Shape out;
  std::vector<std::int64_t> stride_a;  // per out-dim; 0 where broadcast
  std::vector<std::int64_t> stride_b;
};

Bcast broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
  std::size_t r = std::max(a.size(), b.size());
  Bcast plan;
  plan.out.resize(r);
  std::vector<int> da(r, 1), db(r, 1);
  for (std::size_t i = 0; i < a.size(); ++i) da[r - a.size() + i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) db[r - b.size() + i] = b[i];
  for (std::size_t i = 0; i < r; ++i) {
    if (da[i] != db[i] && da[i] != 1 && db[i] != 1)
      throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(a) + " and " +
                                  shape_str(b) + " are not broadcastable");
    plan.out[i] = std::max(da[i], db[i]);
  }
  plan.stride_a.assign(r, 0);
  plan.stride_b.assign(r, 0);
  std::int64_t sa = 1, sb = 1;
  for (std::size_t i = r; i-- > 0;) {
    plan.stride_a[i] = (da[i] == 1) ? 0 : sa;
    plan.stride_b[i] = (db[i] == 1) ? 0 : sb;
    sa *= da[i];
    sb *= db[i];
  }
  return plan;
}

// Calls fn(out_flat, a_flat, b_flat) for every output position.
template <typename Fn>
void for_each_bcast(const Bcast& plan, Fn&& fn) {
  std::size_t r = plan.out.size();
  if (r == 0) {
    fn(0, 0, 0);
    return;
  }
  std::vector<int> idx(r, 0);
  std::int64_t oa = 0, ob = 0, n = numel_of(plan.out);
  for (std::int64_t o = 0; o < n; ++o) {
    fn(o, oa, ob);
    for (std::size_t i = r; i-- > 0;) {
      ++idx[i];
      oa += plan.stride_a[i];
      ob += plan.stride_b[i];
      if (idx[i] < plan.out[i]) break;
      idx[i] = 0;
      oa -= plan.stride_a[i] * plan.out[i];
      ob -= plan.stride_b[i] * plan.out[i];
    }
  }
}

template <typename FwdFn, typename BwdFn>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* op, FwdFn fwd, BwdFn bwd) {
  Bcast plan = broadcast_shapes(a.shape(), b.shape(), op);
  std::vector<float> out(static_cast<std::size_t>(numel_of(plan.out)));
  const auto av = a.data();
  const auto bv = b.data();
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  } else {
    for_each_bcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) {
      out[static_cast<std::size_t>(o)] = fwd(av[static_cast<std::size_t>(ia)],
                                             bv[static_cast<std::size_t>(ib)]);
    });
  }
  auto an = a.node();
  auto bn = b.node();
  return make_result(plan.out, std::move(out), {a, b}, op, [an, bn, plan, bwd](Node& self) {
    const bool ga = an->requires_grad, gb = bn->requires_grad;
    float* agrad = ga ? an->ensure_grad().data() : nullptr;
    float* bgrad = gb ? bn->ensure_grad().data() : nullptr;
    const float* g = self.grad.data();
    const float* av = an->value.data();
    const float* bv = bn->value.data();
    for_each_bcast(plan, [&](std::int64_t o, std::int64_t ia, std::int64_t ib) {
      auto [da, db] = bwd(av[static_cast<std::size_t>(ia)], bv[static_cast<std::size_t>(ib)]);
      float go = g[static_cast<std::size_t>(o)];
      if (agrad) agrad[static_cast<std::size_t>(ia)] += go * da;
      if (bgrad) bgrad[static_cast<std::size_t>(ib)] += go * db;
    });
  });
}

template <typename FwdFn, typename DerivFn>
Tensor unary_op(const Tensor& a, const char* op, FwdFn fwd, DerivFn deriv) {
  const auto av = a.data();
  std::vector<float> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
  auto an = a.node();
  return make_result(a.shape(), std::move(out), {a}, op, [an, deriv](Node& self) {
    float* agrad = an->ensure_grad().data();
    const float* g = self.grad.data();
    const float* x = an->value.data();
    const float* y = self.value.data();
    for (std::size_t i = 0; i < self.value.size(); ++i)
      agrad[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

// ---- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "add", [](float x, float y) { return x + y; },
                   [](float, float) { return std::pair<float, float>{1.0f, 1.0f}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "sub", [](float x, float y) { return x - y; },
                   [](float, float) { return std::pair<float, float>{1.0f, -1.0f}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "mul", [](float x, float y) { return x * y; },
                   [](float x, float y) { return std::pair<float, float>{y, x}; });
}

Tensor divide(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "div", [](float x, float y) { return x / y; },
                   [](float x, float y) {
                     return std::pair<float, float>{1.0f / y, -x / (y * y)};
                   });
}

Tensor add_scalar(const Tensor& a, float s) {
  return unary_op(a, "add_scalar", [s](float x) { return x + s; },
                  [](float, float) { return 1.0f; });
}

Tensor mul_scalar(const Tensor& a, float s) {
  return unary_op(a, "mul_scalar", [s](float x) { return x * s; },
                  [s](float, float) { return s; });
}

Tensor relu(const Tensor& a) {
  return unary_op(a, "relu", [](float x) { return x > 0.0f ? x : 0.0f; },
                  [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Tensor leaky_relu(const Tensor& a, float slope) {
  return unary_op(a, "leaky_relu", [slope](float x) { return x > 0.0f ? x : slope * x; },
                  [slope](float x, float) { return x > 0.0f ? 1.0f : slope; });
}

Tensor elu(const Tensor& a) {
  return unary_op(a, "elu",
                  [](float x) { return x > 0.0f ? x : static_cast<float>(std::expm1(static_cast<double>(x))); },
                  [](float x, float y) { return x > 0.0f ? 1.0f : y + 1.0f; });
}

Tensor exp_op(const Tensor& a) {
  return unary_op(a, "exp", [](float x) { return static_cast<float>(std::exp(static_cast<double>(x))); },
                  [](float, float y) { return y; });
}

Tensor log_op(const Tensor& a) {
  return unary_op(a, "log", [](float x) { return static_cast<float>(std::log(static_cast<double>(x))); },
                  [](float x, float) { return 1.0f / x; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a, "sigmoid",
                  [](float x) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x)))); },
                  [](float, float y) { return y * (1.0f - y); });
}

// ---- matmul / transpose -----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2)
    throw std::invalid_argument("matmul: inner dimensions differ, " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<float> out(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      const float* arow = av.data() + static_cast<std::size_t>(i) * k;
      for (int t = 0; t < k; ++t) acc += static_cast<double>(arow[t]) * bv[static_cast<std::size_t>(t) * n + j];
      out[static_cast<std::size_t>(i) * n + j] = static_cast<float>(acc);
    }
  }
  auto an = a.node();
  auto bn = b.node();
  return make_result({m, n}, std::move(out), {a, b}, "matmul", [an, bn, m, k, n](Node& self) {
    const float* g = self.grad.data();
    if (an->requires_grad) {
      float* ag = an->ensure_grad().data();
      const float* bv = bn->value.data();
      for (int i = 0; i < m; ++i)
        for (int t = 0; t < k; ++t) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j)
            acc += static_cast<double>(g[static_cast<std::size_t>(i) * n + j]) *
                   bv[static_cast<std::size_t>(t) * n + j];
          ag[static_cast<std::size_t>(i) * k + t] += static_cast<float>(acc);
        }
    }
    if (bn->requires_grad) {
      float* bg = bn->ensure_grad().data();
      const float* av = an->value.data();
      for (int t = 0; t < k; ++t)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int i = 0; i < m; ++i)
            acc += static_cast<double>(av[static_cast<std::size_t>(i) * k + t]) *
                   g[static_cast<std::size_t>(i) * n + j];
          bg[static_cast<std::size_t>(t) * n + j] += static_cast<float>(acc);
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  check_rank(a, 2, "transpose");
  int m = a.dim(0), n = a.dim(1);
  const auto av = a.data();
  std::vector<float> out(av.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(j) * m + i] = av[static_cast<std::size_t>(i) * n + j];
  auto an = a.node();
  return make_result({n, m}, std::move(out), {a}, "transpose", [an, m, n](Node& self) {
    float* ag = an->ensure_grad().data();
    const float* g = self.grad.data();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        ag[static_cast<std::size_t>(i) * n + j] += g[static_cast<std::size_t>(j) * m + i];
  });
}

// ---- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a) {
  const auto av = a.data();
  double acc = 0.0;
  for (float v : av) acc += v;
  auto an = a.node();
  return make_result({}, {static_cast<float>(acc)}, {a}, "sum", [an](Node& self) {
    float g = self.grad[0];
    float* ag = an->ensure_grad().data();
    for (std::size_t i = 0; i < an->value.size(); ++i) ag[i] += g;
  });
}

Tensor mean(const Tensor& a) {
  const auto av = a.data();
  double acc = 0.0;
  for (float v : av) acc += v;
  double inv = 1.0 / static_cast<double>(av.size());
  auto an = a.node();
  return make_result({}, {static_cast<float>(acc * inv)}, {a}, "mean", [an, inv](Node& self) {
    float g = static_cast<float>(self.grad[0] * inv);
    float* ag = an->ensure_grad().data();
    for (std::size_t i = 0; i < an->value.size(); ++i) ag[i] += g;
  });
}

// ---- row-wise ops (last axis) ------------------------------------------------

namespace {

std::pair<std::int64_t, int> row_layout(const Tensor& a, const char* op) {
  if (a.rank() < 1)
    throw std::invalid_argument(std::string(op) + ": requires rank >= 1, got scalar");
  int cols = a.dim(a.rank() - 1);
  std::int64_t rows = a.numel() / cols;
  return {rows, cols};
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  auto [rows, cols] = row_layout(a, "softmax");
  const auto av = a.data();
  std::vector<float> out(av.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* x = av.data() + r * cols;
    float* y = out.data() + r * cols;
    double mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, static_cast<double>(x[c]));
    double denom = 0.0;
    for (int c = 0; c < cols; ++c) denom += std::exp(static_cast<double>(x[c]) - mx);
    for (int c = 0; c < cols; ++c)
      y[c] = static_cast<float>(std::exp(static_cast<double>(x[c]) - mx) / denom);
  }
  auto an = a.node();
  std::int64_t rows_c = rows;
  int cols_c = cols;
  return make_result(a.shape(), std::move(out), {a}, "softmax", [an, rows_c, cols_c](Node& self) {
    float* ag = an->ensure_grad().data();
    const float* g = self.grad.data();
    const float* p = self.value.data();
    for (std::int64_t r = 0; r < rows_c; ++r) {
      const float* gr = g + r * cols_c;
      const float* pr = p + r * cols_c;
      double dot = 0.0;
      for (int c = 0; c < cols_c; ++c) dot += static_cast<double>(gr[c]) * pr[c];
      float* agr = ag + r * cols_c;
      for (int c = 0; c < cols_c; ++c)
        agr[c] += static_cast<float>(pr[c] * (static_cast<double>(gr[c]) - dot));
    }
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  auto [rows, cols] = row_layout(a, "log_softmax");
  const auto av = a.data();
  std::vector<float> out(av.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* x = av.data() + r * cols;
    float* y = out.data() + r * cols;
    double mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, static_cast<double>(x[c]));
    double denom = 0.0;
    for (int c = 0; c < cols; ++c) denom += std::exp(static_cast<double>(x[c]) - mx);
    double lse = mx + std::log(denom);
    for (int c = 0; c < cols; ++c) y[c] = static_cast<float>(static_cast<double>(x[c]) - lse);
  }
  auto an = a.node();
  std::int64_t rows_c = rows;
  int cols_c = cols;
  return make_result(a.shape(), std::move(out), {a}, "log_softmax", [an, rows_c, cols_c](Node& self) {
    float* ag = an->ensure_grad().data();
    const float* g = self.grad.data();
    const float* lp = self.value.data();
    for (std::int64_t r = 0; r < rows_c; ++r) {
      const float* gr = g + r * cols_c;
      const float* lpr = lp + r * cols_c;
      double gsum = 0.0;
      for (int c = 0; c < cols_c; ++c) gsum += gr[c];
      float* agr = ag + r * cols_c;
      for (int c = 0; c < cols_c; ++c)
        agr[c] += static_cast<float>(static_cast<double>(gr[c]) -
                                     std::exp(static_cast<double>(lpr[c])) * gsum);
    }
  });
}

Tensor l2_normalize_rows(const Tensor& a) {
  auto [rows, cols] = row_layout(a, "l2_normalize");
  const auto av = a.data();
  std::vector<float> out(av.size());
  std::vector<double> norms(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* x = av.data() + r * cols;
    double sq = 0.0;
    for (int c = 0; c < cols; ++c) sq += static_cast<double>(x[c]) * x[c];
    double norm = std::sqrt(sq);
    if (norm < 1e-8)
      throw std::runtime_error("l2_normalize: degenerate row " + std::to_string(r) +
                               " with norm " + std::to_string(norm));
    norms[static_cast<std::size_t>(r)] = norm;
    for (int c = 0; c < cols; ++c) out[r * cols + c] = static_cast<float>(x[c] / norm);
  }
  auto an = a.node();
  std::int64_t rows_c = rows;
  int cols_c = cols;
  return make_result(a.shape(), std::move(out), {a}, "l2_normalize",
                     [an, rows_c, cols_c, norms](Node& self) {
    float* ag = an->ensure_grad().data();
    const float* g = self.grad.data();
    const float* y = self.value.data();
    for (std::int64_t r = 0; r < rows_c; ++r) {
      const float* gr = g + r * cols_c;
      const float* yr = y + r * cols_c;
      double dot = 0.0;
      for (int c = 0; c < cols_c; ++c) dot += static_cast<double>(gr[c]) * yr[c];
      double inv = 1.0 / norms[static_cast<std::size_t>(r)];
      float* agr = ag + r * cols_c;
      for (int c = 0; c < cols_c; ++c)
        agr[c] += static_cast<float>((static_cast<double>(gr[c]) - dot * yr[c]) * inv);
    }
  });
}

// ---- structural ops ----------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  int rank = static_cast<int>(s0.size());
  if (axis < 0 || axis >= rank)
    throw std::invalid_argument("concat: axis " + std::to_string(axis) + " out of range for shape " +
                                shape_str(s0));
  Shape out_shape = s0;
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Shape& s = parts[p].shape();
    if (static_cast<int>(s.size()) != rank)
      throw std::invalid_argument("concat: rank mismatch between inputs");
    for (int d = 0; d < rank; ++d)
      if (d != axis && s[static_cast<std::size_t>(d)] != s0[static_cast<std::size_t>(d)])
        throw std::invalid_argument("concat: shapes " + shape_str(s0) + " and " + shape_str(s) +
                                    " differ outside axis " + std::to_string(axis));
    out_shape[static_cast<std::size_t>(axis)] += s[static_cast<std::size_t>(axis)];
  }
  // outer x axis x inner layout
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= s0[static_cast<std::size_t>(d)];
  for (int d = axis + 1; d < rank; ++d) inner *= s0[static_cast<std::size_t>(d)];
  std::vector<float> out(static_cast<std::size_t>(numel_of(out_shape)));
  std::int64_t out_axis = out_shape[static_cast<std::size_t>(axis)];
  std::vector<std::int64_t> offsets;  // axis offset of each part
  std::int64_t off = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(off);
    std::int64_t pa = p.dim(axis);
    const auto pv = p.data();
    for (std::int64_t o = 0; o < outer; ++o)
      std::copy(pv.begin() + o * pa * inner, pv.begin() + (o + 1) * pa * inner,
                out.begin() + (o * out_axis + off) * inner);
    off += pa;
  }
  std::vector<std::shared_ptr<Node>> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  std::vector<std::int64_t> part_axis;
  for (const Tensor& p : parts) part_axis.push_back(p.dim(axis));
  return make_result(out_shape, std::move(out), parts, "concat",
                     [nodes, offsets, part_axis, outer, inner, out_axis](Node& self) {
    const float* g = self.grad.data();
    for (std::size_t p = 0; p < nodes.size(); ++p) {
      if (!nodes[p]->requires_grad) continue;
      float* pg = nodes[p]->ensure_grad().data();
      std::int64_t pa = part_axis[p];
      for (std::int64_t o = 0; o < outer; ++o) {
        const float* src = g + (o * out_axis + offsets[p]) * inner;
        float* dst = pg + o * pa * inner;
        for (std::int64_t i = 0; i < pa * inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel_of(shape) != a.numel())
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " +
                                shape_str(shape));
  std::vector<float> out(a.data().begin(), a.data().end());
  auto an = a.node();
  return make_result(std::move(shape), std::move(out), {a}, "reshape", [an](Node& self) {
    float* ag = an->ensure_grad().data();
    const float* g = self.grad.data();
    for (std::size_t i = 0; i < self.value.size(); ++i) ag[i] += g[i];
  });
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& rows) {
  check_rank(a, 2, "gather_rows");
  int n = a.dim(0), d = a.dim(1);
  const auto av = a.data();
  std::vector<float> out(rows.size() * static_cast<std::size_t>(d));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    int src = rows[r];
    if (src < 0 || src >= n)
      throw std::invalid_argument("gather_rows: index " + std::to_string(src) +
                                  " out of range for " + std::to_string(n) + " rows");
    std::copy(av.begin() + static_cast<std::int64_t>(src) * d,
              av.begin() + static_cast<std::int64_t>(src + 1) * d,
              out.begin() + static_cast<std::int64_t>(r) * d);
  }
  auto an = a.node();
  return make_result({static_cast<int>(rows.size()), d}, std::move(out), {a}, "gather_rows",
                     [an, rows, d](Node& self) {
    float* ag = an->ensure_grad().data();
    const float* g = self.grad.data();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      float* dst = ag + static_cast<std::int64_t>(rows[r]) * d;
      const float* src = g + static_cast<std::int64_t>(r) * d;
      for (int c = 0; c < d; ++c) dst[c] += src[c];
    }
  });
}

// ---- spatial ops -------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  check_rank(x, 4, "conv2d");
  check_rank(w, 4, "conv2d");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: invalid stride/pad");
  int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  int OC = w.dim(0), IC = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  if (C != IC)
    throw std::invalid_argument("conv2d: input channels " + std::to_string(C) +
                                " != kernel channels " + std::to_string(IC));
  if (b.defined() && (b.rank() != 1 || b.dim(0) != OC))
    throw std::invalid_argument("conv2d: bias shape " + shape_str(b.shape()) +
                                " does not match " + std::to_string(OC) + " output channels");
  int OH = (H + 2 * pad - KH) / stride + 1;
  int OW = (W + 2 * pad - KW) / stride + 1;
  if (OH < 1 || OW < 1)
    throw std::invalid_argument("conv2d: kernel " + shape_str(w.shape()) + " too large for input " +
                                shape_str(x.shape()));
  const auto xv = x.data();
  const auto wv = w.data();
  std::vector<float> out(static_cast<std::size_t>(N) * OC * OH * OW, 0.0f);
  for (int n = 0; n < N; ++n) {
    for (int oc = 0; oc < OC; ++oc) {
      float bias = b.defined() ? b.data()[static_cast<std::size_t>(oc)] : 0.0f;
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
          float acc = bias;
          for (int ic = 0; ic < C; ++ic) {
            const float* xc = xv.data() + ((static_cast<std::size_t>(n) * C + ic) * H) * W;
            const float* wc = wv.data() + ((static_cast<std::size_t>(oc) * C + ic) * KH) * KW;
            for (int ky = 0; ky < KH; ++ky) {
              int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= H) continue;
              for (int kx = 0; kx < KW; ++kx) {
                int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= W) continue;
                acc += xc[static_cast<std::size_t>(iy) * W + ix] * wc[static_cast<std::size_t>(ky) * KW + kx];
              }
            }
          }
          out[((static_cast<std::size_t>(n) * OC + oc) * OH + oy) * OW + ox] = acc;
        }
      }
    }
  }
  auto xn = x.node();
  auto wn = w.node();
  auto bn = b.defined() ? b.node() : nullptr;
  std::vector<Tensor> inputs = {x, w};
  if (b.defined()) inputs.push_back(b);
  return make_result({N, OC, OH, OW}, std::move(out), std::move(inputs), "conv2d",
                     [xn, wn, bn, N, C, H, W, OC, KH, KW, OH, OW, stride, pad](Node& self) {
    const float* g = self.grad.data();
    const float* xv = xn->value.data();
    const float* wv = wn->value.data();
    float* xg = xn->requires_grad ? xn->ensure_grad().data() : nullptr;
    float* wg = wn->requires_grad ? wn->ensure_grad().data() : nullptr;
    float* bg = (bn && bn->requires_grad) ? bn->ensure_grad().data() : nullptr;
    for (int n = 0; n < N; ++n) {
      for (int oc = 0; oc < OC; ++oc) {
        for (int oy = 0; oy < OH; ++oy) {
          for (int ox = 0; ox < OW; ++ox) {
            float go = g[((static_cast<std::size_t>(n) * OC + oc) * OH + oy) * OW + ox];
            if (go == 0.0f) continue;
            if (bg) bg[oc] += go;
            for (int ic = 0; ic < C; ++ic) {
              const float* xc = xv + ((static_cast<std::size_t>(n) * C + ic) * H) * W;
              const float* wc = wv + ((static_cast<std::size_t>(oc) * C + ic) * KH) * KW;
              float* xgc = xg ? xg + ((static_cast<std::size_t>(n) * C + ic) * H) * W : nullptr;
              float* wgc = wg ? wg + ((static_cast<std::size_t>(oc) * C + ic) * KH) * KW : nullptr;
              for (int ky = 0; ky < KH; ++ky) {
                int iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= H) continue;
                for (int kx = 0; kx < KW; ++kx) {
                  int ix = ox * stride + kx - pad;
                  if (ix < 0 || ix >= W) continue;
                  std::size_t xi = static_cast<std::size_t>(iy) * W + ix;
                  std::size_t wi = static_cast<std::size_t>(ky) * KW + kx;
                  if (wgc) wgc[wi] += go * xc[xi];
                  if (xgc) xgc[xi] += go * wc[wi];
                }
              }
            }
          }
        }
      }
    }
  });
}

Tensor max_pool2d(const Tensor& x, int k, int stride) {
  check_rank(x, 4, "max_pool2d");
  if (k < 1 || stride < 1) throw std::invalid_argument("max_pool2d: invalid window/stride");
  int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  int OH = (H - k) / stride + 1;
  int OW = (W - k) / stride + 1;
  if (OH < 1 || OW < 1)
    throw std::invalid_argument("max_pool2d: window " + std::to_string(k) + " too large for input " +
                                shape_str(x.shape()));
  const auto xv = x.data();
  std::vector<float> out(static_cast<std::size_t>(N) * C * OH * OW);
  std::vector<std::int32_t> argmax(out.size());
  std::size_t o = 0;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const float* xc = xv.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
      for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox, ++o) {
          float best = -std::numeric_limits<float>::infinity();
          std::int32_t best_i = 0;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              std::int32_t i = static_cast<std::int32_t>((oy * stride + ky) * W + ox * stride + kx);
              if (xc[i] > best) {
                best = xc[i];
                best_i = i;
              }
            }
          out[o] = best;
          argmax[o] = best_i;
        }
      }
    }
  }
  auto xn = x.node();
  std::int64_t plane = static_cast<std::int64_t>(H) * W;
  std::int64_t oplane = static_cast<std::int64_t>(OH) * OW;
  return make_result({N, C, OH, OW}, std::move(out), {x}, "max_pool2d",
                     [xn, argmax, plane, oplane](Node& self) {
    float* xg = xn->ensure_grad().data();
    const float* g = self.grad.data();
    std::int64_t planes = static_cast<std::int64_t>(self.value.size()) / oplane;
    for (std::int64_t p = 0; p < planes; ++p)
      for (std::int64_t i = 0; i < oplane; ++i)
        xg[p * plane + argmax[static_cast<std::size_t>(p * oplane + i)]] += g[p * oplane + i];
  });
}

Tensor mean_pool2d(const Tensor& x, int k, int stride) {
  check_rank(x, 4, "mean_pool2d");
  if (k < 1 || stride < 1) throw std::invalid_argument("mean_pool2d: invalid window/stride");
  int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  int OH = (H - k) / stride + 1;
  int OW = (W - k) / stride + 1;
  if (OH < 1 || OW < 1)
    throw std::invalid_argument("mean_pool2d: window " + std::to_string(k) + " too large for input " +
                                shape_str(x.shape()));
  const auto xv = x.data();
  std::vector<float> out(static_cast<std::size_t>(N) * C * OH * OW);
  double inv = 1.0 / (static_cast<double>(k) * k);
  std::size_t o = 0;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* xc = xv.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox, ++o) {
          double acc = 0.0;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              acc += xc[static_cast<std::size_t>((oy * stride + ky)) * W + ox * stride + kx];
          out[o] = static_cast<float>(acc * inv);
        }
    }
  auto xn = x.node();
  return make_result({N, C, OH, OW}, std::move(out), {x}, "mean_pool2d",
                     [xn, k, stride, H, W, OH, OW, inv](Node& self) {
    float* xg = xn->ensure_grad().data();
    const float* g = self.grad.data();
    std::int64_t oplane = static_cast<std::int64_t>(OH) * OW;
    std::int64_t plane = static_cast<std::int64_t>(H) * W;
    std::int64_t planes = static_cast<std::int64_t>(self.value.size()) / oplane;
    for (std::int64_t p = 0; p < planes; ++p) {
      const float* gp = g + p * oplane;
      float* xp = xg + p * plane;
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          float go = static_cast<float>(gp[static_cast<std::size_t>(oy) * OW + ox] * inv);
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              xp[static_cast<std::size_t>((oy * stride + ky)) * W + ox * stride + kx] += go;
        }
    }
  });
}

Tensor global_mean_pool(const Tensor& x) {
  check_rank(x, 4, "global_mean_pool");
  int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto xv = x.data();
  std::vector<float> out(static_cast<std::size_t>(N) * C);
  double inv = 1.0 / (static_cast<double>(H) * W);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* xc = xv.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
      double acc = 0.0;
      for (int i = 0; i < H * W; ++i) acc += xc[i];
      out[static_cast<std::size_t>(n) * C + c] = static_cast<float>(acc * inv);
    }
  auto xn = x.node();
  std::int64_t plane = static_cast<std::int64_t>(H) * W;
  return make_result({N, C}, std::move(out), {x}, "global_mean_pool", [xn, plane, inv](Node& self) {
    float* xg = xn->ensure_grad().data();
    const float* g = self.grad.data();
    for (std::size_t p = 0; p < self.value.size(); ++p) {
      float go = static_cast<float>(g[p] * inv);
      float* xp = xg + static_cast<std::int64_t>(p) * plane;
      for (std::int64_t i = 0; i < plane; ++i) xp[i] += go;
    }
  });
}

// ---- fused losses -------------------------------------------------------------

Tensor alignment_loss(const Tensor& anchors, const Tensor& z, const std::vector<int>& labels,
                      float tau) {
  check_rank(anchors, 2, "alignment_loss");
  check_rank(z, 2, "alignment_loss");
  if (anchors.shape() != z.shape())
    throw std::invalid_argument("alignment_loss: anchors " + shape_str(anchors.shape()) +
                                " and embeddings " + shape_str(z.shape()) + " differ");
  int m = anchors.dim(0), d = anchors.dim(1);
  if (static_cast<int>(labels.size()) != m)
    throw std::invalid_argument("alignment_loss: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(m) + " rows");
  if (!(tau > 0.0f)) throw std::invalid_argument("alignment_loss: temperature must be positive");
  if (m < 2) throw std::invalid_argument("alignment_loss: need at least 2 rows");

  const auto av = anchors.data();
  const auto zv = z.data();
  std::vector<double> scores(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    const float* ai = av.data() + static_cast<std::size_t>(i) * d;
    for (int k = 0; k < m; ++k) {
      const float* zk = zv.data() + static_cast<std::size_t>(k) * d;
      double dot = 0.0;
      for (int c = 0; c < d; ++c) dot += static_cast<double>(ai[c]) * zk[c];
      scores[static_cast<std::size_t>(i) * m + k] = dot / tau;
    }
  }
  std::vector<int> n_pos(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (j != i && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)])
        ++n_pos[static_cast<std::size_t>(i)];

  std::vector<double> lse(static_cast<std::size_t>(m));
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* srow = scores.data() + static_cast<std::size_t>(i) * m;
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k)
      if (k != i) mx = std::max(mx, srow[k]);
    double denom = 0.0;
    for (int k = 0; k < m; ++k)
      if (k != i) denom += std::exp(srow[k] - mx);
    lse[static_cast<std::size_t>(i)] = mx + std::log(denom);
    if (n_pos[static_cast<std::size_t>(i)] == 0) continue;
    double anchor_sum = 0.0;
    for (int j = 0; j < m; ++j)
      if (j != i && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)])
        anchor_sum += lse[static_cast<std::size_t>(i)] - srow[j];
    loss += anchor_sum / n_pos[static_cast<std::size_t>(i)];
  }

  auto an = anchors.node();
  auto zn = z.node();
  return make_result({}, {static_cast<float>(loss)}, {anchors, z}, "alignment_loss",
                     [an, zn, labels, tau, m, d, scores, lse, n_pos](Node& self) {
    double g = self.grad[0];
    // dL/dS[i][k] = g * (sigma_ik - pos_ik / n_i) for k != i, rows with positives.
    std::vector<double> ds(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) {
      if (n_pos[static_cast<std::size_t>(i)] == 0) continue;
      const double* srow = scores.data() + static_cast<std::size_t>(i) * m;
      double* drow = ds.data() + static_cast<std::size_t>(i) * m;
      double inv_n = 1.0 / n_pos[static_cast<std::size_t>(i)];
      for (int k = 0; k < m; ++k) {
        if (k == i) continue;
        double sigma = std::exp(srow[k] - lse[static_cast<std::size_t>(i)]);
        double pos = (labels[static_cast<std::size_t>(k)] == labels[static_cast<std::size_t>(i)]) ? inv_n : 0.0;
        drow[k] = g * (sigma - pos);
      }
    }
    const float* av = an->value.data();
    const float* zv = zn->value.data();
    double inv_tau = 1.0 / tau;
    if (an->requires_grad) {
      float* ag = an->ensure_grad().data();
      for (int i = 0; i < m; ++i) {
        const double* drow = ds.data() + static_cast<std::size_t>(i) * m;
        for (int c = 0; c < d; ++c) {
          double acc = 0.0;
          for (int k = 0; k < m; ++k) acc += drow[k] * zv[static_cast<std::size_t>(k) * d + c];
          ag[static_cast<std::size_t>(i) * d + c] += static_cast<float>(acc * inv_tau);
        }
      }
    }
    if (zn->requires_grad) {
      float* zg = zn->ensure_grad().data();
      for (int k = 0; k < m; ++k) {
        for (int c = 0; c < d; ++c) {
          double acc = 0.0;
          for (int i = 0; i < m; ++i)
            acc += ds[static_cast<std::size_t>(i) * m + k] * av[static_cast<std::size_t>(i) * d + c];
          zg[static_cast<std::size_t>(k) * d + c] += static_cast<float>(acc * inv_tau);
        }
      }
    }
  });
}

Tensor weighted_bce_with_logits(const Tensor& logits, const Tensor& targets, float pos_weight,
                                float norm) {
  if (logits.shape() != targets.shape())
    throw std::invalid_argument("weighted_bce_with_logits: logits " + shape_str(logits.shape()) +
                                " vs targets " + shape_str(targets.shape()));
  const auto xv = logits.data();
  const auto tv = targets.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    double x = xv[i], t = tv[i];
    double softplus_neg = std::log1p(std::exp(-std::abs(x))) + std::max(-x, 0.0);  // log(1+e^-x)
    double softplus_pos = std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);   // log(1+e^x)
    acc += pos_weight * t * softplus_neg + (1.0 - t) * softplus_pos;
  }
  double scale = static_cast<double>(norm) / static_cast<double>(xv.size());
  auto xn = logits.node();
  auto tn = targets.node();
  return make_result({}, {static_cast<float>(acc * scale)}, {logits, targets},
                     "weighted_bce_with_logits", [xn, tn, pos_weight, scale](Node& self) {
    if (!xn->requires_grad) return;
    double g = static_cast<double>(self.grad[0]) * scale;
    float* xg = xn->ensure_grad().data();
    const float* xv = xn->value.data();
    const float* tv = tn->value.data();
    for (std::size_t i = 0; i < xn->value.size(); ++i) {
      double s = 1.0 / (1.0 + std::exp(-static_cast<double>(xv[i])));
      double t = tv[i];
      xg[i] += static_cast<float>(g * (pos_weight * t * (s - 1.0) + (1.0 - t) * s));
    }
  });
}

}  // namespace ctxf
