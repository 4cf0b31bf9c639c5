#include "ctxf/predict.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "ctxf/io.hpp"
#include "ctxf/optim.hpp"
#include "ctxf/rng.hpp"

namespace ctxf::pred {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_design(const Tensor& z, const std::vector<int>& labels,
                  const std::vector<std::string>& class_names,
                  const char* who) {
  if (z.rank() != 2)
    throw std::invalid_argument(std::string(who) + ": embeddings must be 2-D");
  if (static_cast<int>(labels.size()) != z.dim(0))
    throw std::invalid_argument(std::string(who) +
                                ": labels size does not match embedding rows");
  if (class_names.size() < 2)
    throw std::invalid_argument(std::string(who) + ": need at least 2 classes");
  const int n_classes = static_cast<int>(class_names.size());
  for (int y : labels)
    if (y < 0 || y >= n_classes)
      throw std::invalid_argument(std::string(who) + ": label " +
                                  std::to_string(y) + " out of range");
}

// In-place Cholesky of a symmetric positive definite matrix (row-major d*d).
// Returns false when a pivot is non-positive or non-finite.
bool cholesky(std::vector<double>& a, int d) {
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<size_t>(i) * d + j];
      for (int k = 0; k < j; ++k)
        s -= a[static_cast<size_t>(i) * d + k] * a[static_cast<size_t>(j) * d + k];
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) return false;
        a[static_cast<size_t>(i) * d + i] = std::sqrt(s);
      } else {
        a[static_cast<size_t>(i) * d + j] = s / a[static_cast<size_t>(j) * d + j];
      }
    }
    for (int j = i + 1; j < d; ++j) a[static_cast<size_t>(i) * d + j] = 0.0;
  }
  return true;
}

// Solves L u = rhs for lower-triangular L by forward substitution.
void forward_solve(const std::vector<double>& l, int d, std::vector<double>& u) {
  for (int i = 0; i < d; ++i) {
    double s = u[i];
    for (int k = 0; k < i; ++k) s -= l[static_cast<size_t>(i) * d + k] * u[k];
    u[i] = s / l[static_cast<size_t>(i) * d + i];
  }
}

std::string format_percent(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

GaussianHead fit_gaussian(const Tensor& z, const std::vector<int>& labels,
                          const std::vector<std::string>& class_names,
                          double lambda) {
  check_design(z, labels, class_names, "fit_gaussian");
  if (lambda < 0.0)
    throw std::invalid_argument("fit_gaussian: lambda must be >= 0");
  const int n = z.dim(0);
  const int d = z.dim(1);
  const int n_classes = static_cast<int>(class_names.size());
  auto zv = z.data();

  std::vector<std::vector<int>> members(n_classes);
  for (int i = 0; i < n; ++i) members[labels[i]].push_back(i);
  for (int c = 0; c < n_classes; ++c)
    if (members[c].size() < 2)
      throw std::invalid_argument("fit_gaussian: class '" + class_names[c] +
                                  "' has " + std::to_string(members[c].size()) +
                                  " samples, need at least 2");

  GaussianHead head;
  head.class_names = class_names;
  head.d = d;
  head.mean.resize(n_classes);
  head.covariance.resize(n_classes);
  head.chol.resize(n_classes);
  head.log_det.resize(n_classes);
  head.prior.assign(n_classes, 1.0 / n_classes);

  for (int c = 0; c < n_classes; ++c) {
    const auto& idx = members[c];
    const double inv_n = 1.0 / static_cast<double>(idx.size());
    std::vector<double>& mu = head.mean[c];
    mu.assign(d, 0.0);
    for (int i : idx)
      for (int k = 0; k < d; ++k) mu[k] += zv[static_cast<size_t>(i) * d + k];
    for (double& v : mu) v *= inv_n;

    std::vector<double>& cov = head.covariance[c];
    cov.assign(static_cast<size_t>(d) * d, 0.0);
    std::vector<double> centered(d);
    for (int i : idx) {
      for (int k = 0; k < d; ++k)
        centered[k] = zv[static_cast<size_t>(i) * d + k] - mu[k];
      for (int a = 0; a < d; ++a)
        for (int b = 0; b <= a; ++b)
          cov[static_cast<size_t>(a) * d + b] += centered[a] * centered[b];
    }
    for (int a = 0; a < d; ++a)
      for (int b = 0; b <= a; ++b) {
        cov[static_cast<size_t>(a) * d + b] *= inv_n;
        cov[static_cast<size_t>(b) * d + a] = cov[static_cast<size_t>(a) * d + b];
      }
    for (int a = 0; a < d; ++a) cov[static_cast<size_t>(a) * d + a] += lambda;

    head.chol[c] = cov;
    if (!cholesky(head.chol[c], d))
      throw std::runtime_error("fit_gaussian: covariance of class '" +
                               class_names[c] +
                               "' is singular despite shrinkage");
    double log_det = 0.0;
    for (int a = 0; a < d; ++a)
      log_det += 2.0 * std::log(head.chol[c][static_cast<size_t>(a) * d + a]);
    head.log_det[c] = log_det;
  }
  return head;
}

Tensor predict_gaussian(const GaussianHead& head, const Tensor& z) {
  if (z.rank() != 2 || z.dim(1) != head.d)
    throw std::invalid_argument(
        "predict_gaussian: embeddings must be 2-D with width " +
        std::to_string(head.d));
  if (head.n_classes() == 0)
    throw std::invalid_argument("predict_gaussian: head is not fitted");
  const int n = z.dim(0);
  const int d = head.d;
  const int n_classes = head.n_classes();
  auto zv = z.data();

  std::vector<float> out(static_cast<size_t>(n) * n_classes);
  std::vector<double> scores(n_classes);
  std::vector<double> u(d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < n_classes; ++c) {
      for (int k = 0; k < d; ++k)
        u[k] = zv[static_cast<size_t>(i) * d + k] - head.mean[c][k];
      forward_solve(head.chol[c], d, u);
      double maha = 0.0;
      for (int k = 0; k < d; ++k) maha += u[k] * u[k];
      scores[c] = -0.5 * (d * kLog2Pi + head.log_det[c] + maha) +
                  std::log(head.prior[c]);
    }
    const double hi = *std::max_element(scores.begin(), scores.end());
    double denom = 0.0;
    for (double s : scores) denom += std::exp(s - hi);
    for (int c = 0; c < n_classes; ++c)
      out[static_cast<size_t>(i) * n_classes + c] =
          static_cast<float>(std::exp(scores[c] - hi) / denom);
  }
  return Tensor::from_data({n, n_classes}, std::move(out));
}

LinearHead fit_linear(const Tensor& z, const std::vector<int>& labels,
                      const std::vector<std::string>& class_names,
                      int epochs, float lr, std::uint64_t seed) {
  check_design(z, labels, class_names, "fit_linear");
  if (epochs < 0) throw std::invalid_argument("fit_linear: epochs must be >= 0");
  if (!(lr > 0.0f)) throw std::invalid_argument("fit_linear: lr must be > 0");
  const int n = z.dim(0);
  const int d = z.dim(1);
  const int n_classes = static_cast<int>(class_names.size());

  LinearHead head;
  head.class_names = class_names;
  Rng rng(seed);
  const float limit = std::sqrt(6.0f / static_cast<float>(n_classes + d));
  head.w = Tensor::uniform({n_classes, d}, rng, -limit, limit, true);
  head.b = Tensor::zeros({1, n_classes}, true);

  Tensor x = z.detached_copy();
  std::vector<float> onehot(static_cast<size_t>(n) * n_classes, 0.0f);
  for (int i = 0; i < n; ++i)
    onehot[static_cast<size_t>(i) * n_classes + labels[i]] = 1.0f;
  Tensor targets = Tensor::from_data({n, n_classes}, std::move(onehot));

  Adam opt({{"w", head.w}, {"b", head.b}}, lr);
  for (int e = 0; e < epochs; ++e) {
    opt.zero_grad();
    Tensor logits = add(matmul(x, transpose(head.w)), head.b);
    Tensor loss = mul_scalar(sum(mul(log_softmax_rows(logits), targets)),
                             -1.0f / static_cast<float>(n));
    if (!std::isfinite(loss.value()))
      throw std::runtime_error("fit_linear: non-finite loss at epoch " +
                               std::to_string(e));
    backward(loss);
    opt.step();
  }
  return head;
}

Tensor predict_linear(const LinearHead& head, const Tensor& z) {
  if (!head.w.defined())
    throw std::invalid_argument("predict_linear: head is not fitted");
  if (z.rank() != 2 || z.dim(1) != head.w.dim(1))
    throw std::invalid_argument(
        "predict_linear: embeddings must be 2-D with width " +
        std::to_string(head.w.dim(1)));
  Tensor logits = add(matmul(z.detached_copy(), transpose(head.w)), head.b);
  return softmax_rows(logits).detached_copy();
}

std::vector<int> argmax_rows(const Tensor& probs) {
  if (probs.rank() != 2 || probs.dim(1) < 1)
    throw std::invalid_argument("argmax_rows: need a non-empty 2-D matrix");
  const int n = probs.dim(0);
  const int c = probs.dim(1);
  auto v = probs.data();
  std::vector<int> out(n, 0);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (v[static_cast<size_t>(i) * c + j] > v[static_cast<size_t>(i) * c + best])
        best = j;
    out[i] = best;
  }
  return out;
}

EvalResult evaluate(const std::vector<int>& pred,
                    const std::vector<std::string>& pred_class_names,
                    const data::ImageDataset& d) {
  if (d.n() == 0) throw std::invalid_argument("evaluate: empty dataset");
  if (pred.size() != d.labels.size())
    throw std::invalid_argument("evaluate: prediction count " +
                                std::to_string(pred.size()) +
                                " does not match dataset size " +
                                std::to_string(d.labels.size()));
  const int n_pred = static_cast<int>(pred_class_names.size());
  if (n_pred == 0)
    throw std::invalid_argument("evaluate: empty prediction class list");
  for (int p : pred)
    if (p < 0 || p >= n_pred)
      throw std::invalid_argument("evaluate: prediction " + std::to_string(p) +
                                  " out of range");

  EvalResult r;
  r.true_classes = d.class_names;
  r.pred_classes = pred_class_names;
  const int n_true = d.n_classes();
  r.confusion.assign(n_true, std::vector<int>(n_pred, 0));
  r.per_class_accuracy.assign(n_true, 0.0);
  r.in_head.assign(n_true, false);
  for (int c = 0; c < n_true; ++c)
    r.in_head[c] = std::find(pred_class_names.begin(), pred_class_names.end(),
                             d.class_names[c]) != pred_class_names.end();

  std::vector<int> correct(n_true, 0), total(n_true, 0);
  for (size_t i = 0; i < pred.size(); ++i) {
    const int t = d.labels[i];
    const int p = pred[i];
    r.confusion[t][p] += 1;
    total[t] += 1;
    if (pred_class_names[p] == d.class_names[t]) correct[t] += 1;
  }
  long eval_correct = 0, eval_total = 0;
  for (int c = 0; c < n_true; ++c) {
    if (total[c] > 0)
      r.per_class_accuracy[c] = static_cast<double>(correct[c]) / total[c];
    if (r.in_head[c]) {
      eval_correct += correct[c];
      eval_total += total[c];
    }
  }
  if (eval_total == 0)
    throw std::invalid_argument(
        "evaluate: no dataset class is covered by the predictor");
  r.overall_accuracy = static_cast<double>(eval_correct) / eval_total;
  return r;
}

EvalResult evaluate_gaussian(const GaussianHead& head,
                             const enc::EncoderModel& m,
                             const data::ImageDataset& d) {
  Tensor z = enc::embed_images(m, d.images);
  return evaluate(argmax_rows(predict_gaussian(head, z)), head.class_names, d);
}

EvalResult evaluate_linear(const LinearHead& head, const enc::EncoderModel& m,
                           const data::ImageDataset& d) {
  Tensor z = enc::embed_images(m, d.images);
  return evaluate(argmax_rows(predict_linear(head, z)), head.class_names, d);
}

AccuracyRow to_accuracy_row(const std::string& model, const EvalResult& r) {
  AccuracyRow row;
  row.model = model;
  for (size_t c = 0; c < r.true_classes.size(); ++c)
    row.per_class.push_back(r.in_head[c]
                                ? 100.0 * r.per_class_accuracy[c]
                                : std::numeric_limits<double>::quiet_NaN());
  row.all = 100.0 * r.overall_accuracy;
  return row;
}

void write_accuracy_csv(const std::string& path,
                        const std::vector<std::string>& class_names,
                        const std::vector<AccuracyRow>& rows) {
  std::string text = "model";
  for (const auto& name : class_names) text += "," + name;
  text += ",All\n";
  for (const auto& row : rows) {
    if (row.per_class.size() != class_names.size())
      throw std::invalid_argument("write_accuracy_csv: row '" + row.model +
                                  "' has " +
                                  std::to_string(row.per_class.size()) +
                                  " entries, expected " +
                                  std::to_string(class_names.size()));
    text += row.model;
    for (double v : row.per_class) text += "," + format_percent(v);
    text += "," + format_percent(row.all) + "\n";
  }
  io::write_file(path, text);
}

}  // namespace ctxf::pred
