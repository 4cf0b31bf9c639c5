#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxf/datasets.hpp"
#include "ctxf/encoder.hpp"
#include "ctxf/kg.hpp"
#include "ctxf/kge.hpp"
#include "ctxf/tensor.hpp"

namespace ctxf::infusion {

// One training batch: two augmented views per source sample, stored
// consecutively, so views (2i, 2i+1) share a source image and a label.
struct ContrastiveBatch {
  std::vector<img::Image> views;  // size 2N
  std::vector<int> labels;        // size 2N, one entry per view
  int n_source = 0;               // N

  // Enforces pairing, N >= 2, and at least two distinct classes.
  void validate() const;
};

// Anchor-alignment contrastive loss with knowledge-graph class embeddings as
// anchors: every view i is an anchor, its positives are the other views of
// its class, and the per-anchor normalizer is the positive count. class_emb
// row r anchors label r. Differentiable w.r.t. both arguments.
Tensor kg_contrastive_loss(const Tensor& class_emb, const Tensor& z,
                           const std::vector<int>& labels, float tau);

// The supervised-contrastive baseline: identical structure with each view's
// own embedding as its anchor.
Tensor supcon_baseline_loss(const Tensor& z, const std::vector<int>& labels, float tau);

struct TrainConfig {
  float tau = 0.1f;
  int epochs = 500;
  int batch_size = 32;  // source samples per batch; each yields two views
  float lr = 0.001f;
  float lr_decay = 0.1f;  // cosine schedule floor as a fraction of lr
  std::uint64_t seed = 0;
  enc::EncoderConfig encoder;
  enc::AugmentConfig augment;
  kge::GatConfig gat;  // peer mode only
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;  // per-anchor average over the epoch
  double lr = 0.0;
  double wall_ms = 0.0;
};

struct TrainedModel {
  enc::EncoderModel encoder;
  // (n_classes, 128) anchor rows in dataset class order. In trainer mode
  // these are the frozen input rows (bitwise unchanged); in peer mode the
  // final graph-attention output; undefined for the baseline.
  Tensor class_embedding;
  std::vector<std::string> class_names;
  kge::GatModel gat;  // populated in peer mode only
  bool has_gat = false;
  std::vector<EpochStats> log;
};

// KG-as-trainer: the class embedding is frozen; only encoder and head train.
TrainedModel train_with_kg_trainer(const data::ImageDataset& train,
                                   const kge::KgEmbedding& embedding, const TrainConfig& cfg);

// KG-as-peer: a graph attention network produces the class anchors and is
// optimized jointly with the encoder under the same loss (one optimizer, one
// backward pass per batch).
TrainedModel train_with_kg_peer(const data::ImageDataset& train, const kg::ViewSubgraph& view,
                                const TrainConfig& cfg);

// Supervised-contrastive baseline without any knowledge graph.
TrainedModel train_supcon_baseline(const data::ImageDataset& train, const TrainConfig& cfg);

// CSV with header epoch,mean_loss,lr,wall_ms. Wall time is measured, so two
// otherwise identical runs differ only in that column.
void write_training_log(const std::string& path, const std::vector<EpochStats>& log);

}  // namespace ctxf::infusion
