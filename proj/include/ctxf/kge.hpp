#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxf/kg.hpp"
#include "ctxf/optim.hpp"
#include "ctxf/rng.hpp"
#include "ctxf/tensor.hpp"

namespace ctxf::kge {

inline constexpr std::uint32_t kEmbeddingVersion = 1;

// GCN preprocessing: D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of
// A + I. Input must be square, symmetric, 0/1 valued with a zero diagonal.
Tensor normalize_adjacency(const Tensor& a);

// One context vector per dataset class, rows unit-norm, row order equal to the
// source graph's class_list.
struct KgEmbedding {
  std::string view_name;
  std::vector<std::string> class_order;
  Tensor vectors;  // (n_classes, dim)

  int n_classes() const { return vectors.dim(0); }
  int dim() const { return vectors.dim(1); }
};

// Binary container: "CTXE" magic, u32 version, view name (u32 length + bytes),
// u32 n_classes, u32 dim, then per class a name and dim little-endian floats.
void save_embedding(const std::string& path, const KgEmbedding& e);
KgEmbedding load_embedding(const std::string& path);

// ---- graph auto-encoder (unsupervised; the frozen "trainer" embedding) --------

struct GaeConfig {
  int hidden = 128;
  int out = 128;
  int epochs = 500;
  float lr = 0.01f;
};

struct GaeModel {
  Tensor w1;  // (n_features, hidden)
  Tensor w2;  // (hidden, out)

  static GaeModel init(int n_features, const GaeConfig& cfg, Rng& rng);
  ParamList params(const std::string& prefix) const;
};

// Z = a_norm * relu(a_norm * X * W1) * W2, rows L2-normalized. Errors if any
// row is degenerate (pre-normalization norm < 1e-8).
Tensor gae_forward(const GaeModel& m, const Tensor& a_norm, const Tensor& x);

struct GaeTrainResult {
  KgEmbedding embedding;
  float initial_loss;  // dense reconstruction BCE at epoch 0
  float final_loss;    // same loss after the last update
};

// Fits the inner-product decoder sigmoid(Z Z^T) to A + I with dense weighted
// BCE (positives reweighted by the negative/positive ratio) for cfg.epochs
// Adam steps, then returns the dataset-class rows of Z.
GaeTrainResult train_gae(const kg::ViewSubgraph& view, const GaeConfig& cfg, std::uint64_t seed);

// ---- graph attention network (jointly trainable; the "peer" embedding) --------

struct GatConfig {
  int hidden = 256;  // layer-1 width after concatenating all heads
  int heads = 8;
  int out = 128;
  float slope = 0.2f;  // leaky-relu slope on attention scores
};

struct GatModel {
  GatConfig cfg;
  // Layer 1, per head: projection (n_features, hidden/heads) and the two
  // halves of the attention vector, each (hidden/heads, 1).
  std::vector<Tensor> w1, a1_src, a1_dst;
  // Layer 2, per head: (hidden, out) projections, attention halves (out, 1);
  // head outputs are averaged.
  std::vector<Tensor> w2, a2_src, a2_dst;

  static GatModel init(int n_features, const GatConfig& cfg, Rng& rng);
  ParamList params(const std::string& prefix) const;
};

struct GatForward {
  Tensor z;                       // (n, out), unit rows
  std::vector<Tensor> attention;  // row-stochastic (n, n) per head, layer 1
                                  // first, then layer 2
};

// Two rounds of masked multi-head attention over A + I neighborhoods:
// layer 1 concatenates heads through an ELU, layer 2 averages heads; the
// result is row-normalized. Differentiable w.r.t. model parameters.
GatForward gat_forward(const GatModel& m, const Tensor& adjacency, const Tensor& x);

// Produces the class rows for a view: "gae" trains a fresh auto-encoder,
// "gat" runs a freshly initialized attention network forward (its weights
// only become meaningful when trained jointly with an image encoder).
KgEmbedding embed_view(const kg::ViewSubgraph& view, const std::string& method,
                       std::uint64_t seed);

}  // namespace ctxf::kge
