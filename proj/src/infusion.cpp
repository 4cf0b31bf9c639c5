#include "ctxf/infusion.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctxf/io.hpp"
#include "ctxf/optim.hpp"
#include "ctxf/rng.hpp"

namespace ctxf::infusion {

namespace {

// Stream tag for the epoch shuffle, far above any sample index.
constexpr std::uint64_t kShuffleTag = 0xA5F0000000000001ULL;

void check_unit_rows(const Tensor& t, const char* what) {
  const int d = t.dim(1);
  auto v = t.data();
  for (int i = 0; i < t.dim(0); ++i) {
    double n2 = 0.0;
    for (int k = 0; k < d; ++k) n2 += static_cast<double>(v[i * d + k]) * v[i * d + k];
    if (n2 < 0.96 || n2 > 1.04) {
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(i) +
                                  " is not unit-norm (|row|^2 = " + std::to_string(n2) + ")");
    }
  }
}

}  // namespace

void ContrastiveBatch::validate() const {
  if (n_source < 2) {
    throw std::invalid_argument("ContrastiveBatch: need at least 2 source samples, have " +
                                std::to_string(n_source));
  }
  if (views.size() != static_cast<size_t>(2 * n_source) || labels.size() != views.size()) {
    throw std::invalid_argument("ContrastiveBatch: expected " + std::to_string(2 * n_source) +
                                " views and labels");
  }
  for (int i = 0; i < n_source; ++i) {
    if (labels[2 * i] != labels[2 * i + 1]) {
      throw std::invalid_argument("ContrastiveBatch: views " + std::to_string(2 * i) + " and " +
                                  std::to_string(2 * i + 1) +
                                  " come from one source sample but disagree on the label");
    }
  }
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    throw std::invalid_argument("ContrastiveBatch: need at least 2 distinct classes");
  }
}

Tensor kg_contrastive_loss(const Tensor& class_emb, const Tensor& z,
                           const std::vector<int>& labels, float tau) {
  if (class_emb.rank() != 2 || z.rank() != 2 || class_emb.dim(1) != z.dim(1)) {
    throw std::invalid_argument("kg_contrastive_loss: class_emb and z must be 2-d with equal width");
  }
  for (int l : labels) {
    if (l < 0 || l >= class_emb.dim(0)) {
      throw std::invalid_argument("kg_contrastive_loss: label " + std::to_string(l) +
                                  " has no class embedding row (have " +
                                  std::to_string(class_emb.dim(0)) + ")");
    }
  }
  check_unit_rows(z, "kg_contrastive_loss: z");
  Tensor anchors = gather_rows(class_emb, labels);
  return alignment_loss(anchors, z, labels, tau);
}

Tensor supcon_baseline_loss(const Tensor& z, const std::vector<int>& labels, float tau) {
  check_unit_rows(z, "supcon_baseline_loss: z");
  return alignment_loss(z, z, labels, tau);
}

namespace {

struct EpochAccumulator {
  double loss_sum = 0.0;
  std::int64_t anchors = 0;
};

// Shared training loop. anchor_fn(z, labels) returns the loss for one batch;
// it decides where anchors come from (frozen rows, GAT rows, or z itself).
template <typename AnchorLossFn, typename EpochHookFn>
std::vector<EpochStats> run_training(const data::ImageDataset& train, const TrainConfig& cfg,
                                     const enc::EncoderModel& encoder, Adam& opt,
                                     AnchorLossFn&& batch_loss, EpochHookFn&& epoch_hook) {
  train.validate();
  if (train.n() < 2) throw std::invalid_argument("train: need at least 2 samples");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 2) throw std::invalid_argument("train: batch size must be >= 2");
  if (!(cfg.tau > 0.0f)) throw std::invalid_argument("train: tau must be positive");
  std::set<int> distinct(train.labels.begin(), train.labels.end());
  if (distinct.size() < 2) {
    throw std::invalid_argument("train: dataset must contain at least 2 classes");
  }

  CosineSchedule schedule(cfg.lr, cfg.lr_decay, cfg.epochs);
  Rng base(cfg.seed);
  std::vector<EpochStats> log;

  std::vector<int> order(train.images.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = schedule.lr_at(epoch);
    opt.set_lr(static_cast<float>(lr));

    Rng shuffle_rng = base.fork(kShuffleTag, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    EpochAccumulator acc;
    int batch_index = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const size_t stop = std::min(order.size(), start + cfg.batch_size);

      ContrastiveBatch batch;
      batch.n_source = static_cast<int>(stop - start);
      if (batch.n_source < 2) continue;  // trailing singleton
      for (size_t p = start; p < stop; ++p) {
        const int idx = order[p];
        Rng stream = base.fork(static_cast<std::uint64_t>(idx), static_cast<std::uint64_t>(epoch));
        auto [a, b] = enc::augment_pair(train.images[idx], cfg.augment, stream);
        batch.views.push_back(std::move(a));
        batch.views.push_back(std::move(b));
        batch.labels.push_back(train.labels[idx]);
        batch.labels.push_back(train.labels[idx]);
      }
      std::set<int> batch_classes(batch.labels.begin(), batch.labels.end());
      if (batch_classes.size() < 2) continue;  // a single-class tail adds no contrast
      batch.validate();

      Tensor z = enc::project(encoder, enc::encode(encoder, img::to_tensor(batch.views)));
      Tensor loss = batch_loss(z, batch.labels);
      if (!loss.all_finite()) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index));
      }
      acc.loss_sum += loss.value();
      acc.anchors += static_cast<std::int64_t>(batch.labels.size());

      opt.zero_grad();
      backward(loss);
      opt.step();
    }
    if (acc.anchors == 0) {
      throw std::runtime_error("train: no valid batch at epoch " + std::to_string(epoch) +
                               " (batches need 2 samples and 2 classes)");
    }

    epoch_hook(epoch);
    const auto t1 = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = acc.loss_sum / static_cast<double>(acc.anchors);
    stats.lr = lr;
    stats.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    log.push_back(stats);
  }
  return log;
}

}  // namespace

TrainedModel train_with_kg_trainer(const data::ImageDataset& train,
                                   const kge::KgEmbedding& embedding, const TrainConfig& cfg) {
  // Reorder embedding rows into dataset class order; a dataset class that has
  // samples must have an embedding row.
  std::map<std::string, int> emb_row;
  for (size_t i = 0; i < embedding.class_order.size(); ++i) {
    emb_row[embedding.class_order[i]] = static_cast<int>(i);
  }
  std::vector<int> counts = train.class_counts();
  std::vector<float> rows(train.class_names.size() * static_cast<size_t>(embedding.dim()), 0.0f);
  auto src = embedding.vectors.data();
  for (size_t c = 0; c < train.class_names.size(); ++c) {
    auto it = emb_row.find(train.class_names[c]);
    if (it == emb_row.end()) {
      if (counts[c] > 0) {
        throw std::invalid_argument("train_with_kg_trainer: no class embedding for '" +
                                    train.class_names[c] + "'");
      }
      continue;  // class without samples is never used as an anchor
    }
    for (int k = 0; k < embedding.dim(); ++k) {
      rows[c * embedding.dim() + k] = src[it->second * embedding.dim() + k];
    }
  }
  Tensor class_emb = Tensor::from_data(
      {static_cast<int>(train.class_names.size()), embedding.dim()}, std::move(rows));

  Rng rng(cfg.seed);
  TrainedModel model;
  model.encoder = enc::EncoderModel::init(cfg.encoder, rng);
  model.class_embedding = class_emb;
  model.class_names = train.class_names;

  Adam opt(model.encoder.params("encoder"), cfg.lr);
  model.log = run_training(
      train, cfg, model.encoder, opt,
      [&](const Tensor& z, const std::vector<int>& labels) {
        return kg_contrastive_loss(class_emb, z, labels, cfg.tau);
      },
      [](int) {});
  return model;
}

TrainedModel train_with_kg_peer(const data::ImageDataset& train, const kg::ViewSubgraph& view,
                                const TrainConfig& cfg) {
  if (view.class_names != train.class_names) {
    throw std::invalid_argument(
        "train_with_kg_peer: view classes do not match dataset classes");
  }
  kg::AdjacencyData graph = kg::to_adjacency(view);

  Rng rng(cfg.seed);
  TrainedModel model;
  model.encoder = enc::EncoderModel::init(cfg.encoder, rng);
  model.class_names = train.class_names;
  model.gat = kge::GatModel::init(view.n_nodes(), cfg.gat, rng);
  model.has_gat = true;

  // One optimizer over the union: encoder, head, and GAT all receive
  // gradients from the same loss.
  ParamList params = model.encoder.params("encoder");
  for (Param& p : model.gat.params("gat")) params.push_back(p);
  Adam opt(params, cfg.lr);

  std::vector<int> class_rows(view.n_classes());
  for (int c = 0; c < view.n_classes(); ++c) class_rows[c] = c;

  model.log = run_training(
      train, cfg, model.encoder, opt,
      [&](const Tensor& z, const std::vector<int>& labels) {
        // Recompute class anchors through the GAT once per batch so its
        // parameters sit inside the gradient path.
        kge::GatForward fwd = kge::gat_forward(model.gat, graph.adjacency, graph.features);
        Tensor class_emb = gather_rows(fwd.z, class_rows);
        return kg_contrastive_loss(class_emb, z, labels, cfg.tau);
      },
      [](int) {});

  kge::GatForward final_fwd = kge::gat_forward(model.gat, graph.adjacency, graph.features);
  model.class_embedding = gather_rows(final_fwd.z, class_rows).detached_copy();
  return model;
}

TrainedModel train_supcon_baseline(const data::ImageDataset& train, const TrainConfig& cfg) {
  Rng rng(cfg.seed);
  TrainedModel model;
  model.encoder = enc::EncoderModel::init(cfg.encoder, rng);
  model.class_names = train.class_names;

  Adam opt(model.encoder.params("encoder"), cfg.lr);
  model.log = run_training(
      train, cfg, model.encoder, opt,
      [&](const Tensor& z, const std::vector<int>& labels) {
        return supcon_baseline_loss(z, labels, cfg.tau);
      },
      [](int) {});
  return model;
}

void write_training_log(const std::string& path, const std::vector<EpochStats>& log) {
  std::string text = "epoch,mean_loss,lr,wall_ms\n";
  char line[128];
  for (const EpochStats& e : log) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%.8f,%.3f\n", e.epoch, e.mean_loss, e.lr,
                  e.wall_ms);
    text += line;
  }
  io::write_file(path, text);
}

}  // namespace ctxf::infusion
