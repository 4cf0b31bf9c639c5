#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxf/datasets.hpp"
#include "ctxf/encoder.hpp"
#include "ctxf/tensor.hpp"

// Prediction heads over a frozen embedding: a class-conditional Gaussian
// (quadratic discriminant) classifier and a cross-entropy-trained linear
// classifier, plus shared evaluation and CSV reporting.
//
// Note on the Gaussian head: it models each class as a multivariate normal
// fitted from that class's embeddings (mean + shrinkage-regularized
// covariance) and scores by posterior probability. It is a quadratic
// discriminant, not a kernel Gaussian process.
namespace ctxf::pred {

// Class-conditional Gaussian classifier. All statistics are kept in double
// precision; `covariance` already includes the +lambda*I shrinkage term, and
// `chol` holds its lower-triangular Cholesky factor.
struct GaussianHead {
  std::vector<std::string> class_names;
  int d = 0;
  std::vector<std::vector<double>> mean;        // (C) vectors of length d
  std::vector<std::vector<double>> covariance;  // (C) row-major d*d matrices
  std::vector<std::vector<double>> chol;        // (C) lower Cholesky factors
  std::vector<double> log_det;                  // log |covariance_c|
  std::vector<double> prior;                    // sums to 1; uniform by default

  int n_classes() const { return static_cast<int>(class_names.size()); }
};

// Fits per-class mean and population (1/n) covariance of the rows of z, with
// +lambda*I shrinkage. Requires >= 2 samples per class and lambda >= 0;
// throws if any shrunk covariance is still not positive definite.
GaussianHead fit_gaussian(const Tensor& z, const std::vector<int>& labels,
                          const std::vector<std::string>& class_names,
                          double lambda = 1e-3);

// Posterior class probabilities: softmax over per-class Gaussian
// log-likelihood plus log prior. Returns (n, n_classes); rows sum to 1.
Tensor predict_gaussian(const GaussianHead& head, const Tensor& z);

// Linear classifier on the frozen embedding.
struct LinearHead {
  std::vector<std::string> class_names;
  Tensor w;  // (n_classes, d)
  Tensor b;  // (1, n_classes)

  int n_classes() const { return static_cast<int>(class_names.size()); }
};

// Full-batch Adam training of a linear layer with softmax cross-entropy.
// z is treated as a constant. Aborts on a non-finite loss.
LinearHead fit_linear(const Tensor& z, const std::vector<int>& labels,
                      const std::vector<std::string>& class_names,
                      int epochs = 200, float lr = 0.001f,
                      std::uint64_t seed = 0);

// Softmax class probabilities of the linear head, shape (n, n_classes).
Tensor predict_linear(const LinearHead& head, const Tensor& z);

// Row-wise argmax of a (n, C) matrix; ties broken toward the lower index.
std::vector<int> argmax_rows(const Tensor& probs);

// Evaluation of head-space predictions against a labeled dataset. Rows of
// the confusion matrix are true dataset classes, columns are predicted head
// classes; row sums equal per-class sample counts. Dataset classes missing
// from the head (never trained on) are flagged and excluded from the overall
// accuracy.
struct EvalResult {
  std::vector<std::string> true_classes;    // dataset class order
  std::vector<std::string> pred_classes;    // head class order
  std::vector<std::vector<int>> confusion;  // true x predicted counts
  std::vector<double> per_class_accuracy;   // fraction per true class
  std::vector<bool> in_head;                // true class known to the head?
  double overall_accuracy = 0.0;            // fraction over in-head samples
};

EvalResult evaluate(const std::vector<int>& pred,
                    const std::vector<std::string>& pred_class_names,
                    const data::ImageDataset& d);

// Embeds the dataset with the encoder, predicts with the head, and scores.
EvalResult evaluate_gaussian(const GaussianHead& head,
                             const enc::EncoderModel& m,
                             const data::ImageDataset& d);
EvalResult evaluate_linear(const LinearHead& head, const enc::EncoderModel& m,
                           const data::ImageDataset& d);

// One row of a per-class accuracy table, in percentage points. Entries are
// NaN for classes a model was never trained on (printed as "-").
struct AccuracyRow {
  std::string model;
  std::vector<double> per_class;  // percent, aligned with the table's classes
  double all = 0.0;               // percent over evaluated classes
};

AccuracyRow to_accuracy_row(const std::string& model, const EvalResult& r);

// Writes "model,<class...>,All" with one row per entry, percentages with two
// decimals, NaN entries as "-".
void write_accuracy_csv(const std::string& path,
                        const std::vector<std::string>& class_names,
                        const std::vector<AccuracyRow>& rows);

}  // namespace ctxf::pred
