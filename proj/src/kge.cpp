#include "ctxf/kge.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctxf/io.hpp"

namespace ctxf::kge {

namespace {

// Glorot/Xavier uniform: limit = sqrt(6 / (fan_in + fan_out)).
Tensor glorot(int rows, int cols, Rng& rng) {
  const float limit = std::sqrt(6.0f / static_cast<float>(rows + cols));
  return Tensor::uniform({rows, cols}, rng, -limit, limit, /*requires_grad=*/true);
}

}  // namespace

Tensor normalize_adjacency(const Tensor& a) {
  if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
    throw std::invalid_argument("normalize_adjacency: expected a square matrix, got " +
                                std::to_string(a.rank()) + "-d input");
  }
  const int n = a.dim(0);
  std::span<const float> v = a.data();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const float x = v[i * n + j];
      if (x != 0.0f && x != 1.0f) {
        throw std::invalid_argument("normalize_adjacency: entries must be 0 or 1");
      }
      if (x != v[j * n + i]) {
        throw std::invalid_argument("normalize_adjacency: adjacency must be symmetric");
      }
      if (i == j && x != 0.0f) {
        throw std::invalid_argument("normalize_adjacency: diagonal must be zero");
      }
    }
  }
  // Degrees of A + I; every node has degree >= 1 from its self-loop.
  std::vector<double> inv_sqrt(n);
  for (int i = 0; i < n; ++i) {
    double deg = 1.0;
    for (int j = 0; j < n; ++j) deg += v[i * n + j];
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  std::vector<float> out(static_cast<size_t>(n) * n, 0.0f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double aij = (i == j) ? 1.0 : static_cast<double>(v[i * n + j]);
      if (aij != 0.0) {
        out[i * n + j] = static_cast<float>(inv_sqrt[i] * aij * inv_sqrt[j]);
      }
    }
  }
  return Tensor::from_data({n, n}, std::move(out));
}

void save_embedding(const std::string& path, const KgEmbedding& e) {
  if (!e.vectors.defined() || e.vectors.rank() != 2) {
    throw std::invalid_argument("save_embedding: vectors must be a 2-d tensor");
  }
  if (static_cast<int>(e.class_order.size()) != e.vectors.dim(0)) {
    throw std::invalid_argument(
        "save_embedding: class_order has " + std::to_string(e.class_order.size()) +
        " names but vectors has " + std::to_string(e.vectors.dim(0)) + " rows");
  }
  std::ofstream f = io::open_out(path);
  io::write_bytes(f, "CTXE", 4);
  io::write_u32(f, kEmbeddingVersion);
  io::write_string(f, e.view_name);
  io::write_u32(f, static_cast<std::uint32_t>(e.n_classes()));
  io::write_u32(f, static_cast<std::uint32_t>(e.dim()));
  std::span<const float> v = e.vectors.data();
  const int d = e.dim();
  for (int c = 0; c < e.n_classes(); ++c) {
    io::write_string(f, e.class_order[c]);
    io::write_f32s(f, v.data() + static_cast<size_t>(c) * d, static_cast<size_t>(d));
  }
  if (!f) throw std::runtime_error("save_embedding: write failed for " + path);
}

KgEmbedding load_embedding(const std::string& path) {
  std::ifstream f = io::open_in(path);
  io::expect_magic(f, "CTXE", path);
  const std::uint32_t version = io::read_u32(f, "embedding version");
  if (version != kEmbeddingVersion) {
    throw std::runtime_error("load_embedding: unsupported version " +
                             std::to_string(version) + " in " + path);
  }
  KgEmbedding e;
  e.view_name = io::read_string(f, "view name");
  const std::uint32_t n = io::read_u32(f, "class count");
  const std::uint32_t d = io::read_u32(f, "embedding dim");
  if (n == 0 || d == 0 || n > 100000 || d > 100000) {
    throw std::runtime_error("load_embedding: implausible header (" + std::to_string(n) +
                             " classes, dim " + std::to_string(d) + ") in " + path);
  }
  std::vector<float> values(static_cast<size_t>(n) * d);
  for (std::uint32_t c = 0; c < n; ++c) {
    e.class_order.push_back(io::read_string(f, "class name"));
    io::read_f32s(f, values.data() + static_cast<size_t>(c) * d, d, "class vector");
  }
  e.vectors = Tensor::from_data({static_cast<int>(n), static_cast<int>(d)}, std::move(values));
  return e;
}

// ---- GAE ----------------------------------------------------------------------

GaeModel GaeModel::init(int n_features, const GaeConfig& cfg, Rng& rng) {
  if (n_features < 1 || cfg.hidden < 1 || cfg.out < 1) {
    throw std::invalid_argument("GaeModel::init: layer sizes must be positive");
  }
  GaeModel m;
  m.w1 = glorot(n_features, cfg.hidden, rng);
  m.w2 = glorot(cfg.hidden, cfg.out, rng);
  return m;
}

ParamList GaeModel::params(const std::string& prefix) const {
  return {{prefix + ".w1", w1}, {prefix + ".w2", w2}};
}

Tensor gae_forward(const GaeModel& m, const Tensor& a_norm, const Tensor& x) {
  if (a_norm.rank() != 2 || a_norm.dim(0) != a_norm.dim(1)) {
    throw std::invalid_argument("gae_forward: a_norm must be square");
  }
  if (x.rank() != 2 || x.dim(0) != a_norm.dim(0)) {
    throw std::invalid_argument("gae_forward: features must have one row per node");
  }
  Tensor h = relu(matmul(a_norm, matmul(x, m.w1)));
  Tensor z = matmul(a_norm, matmul(h, m.w2));
  return l2_normalize_rows(z);
}

GaeTrainResult train_gae(const kg::ViewSubgraph& view, const GaeConfig& cfg,
                         std::uint64_t seed) {
  if (cfg.epochs < 1) throw std::invalid_argument("train_gae: epochs must be >= 1");
  kg::AdjacencyData data = kg::to_adjacency(view);
  const int n = view.n_nodes();

  Tensor a_norm = normalize_adjacency(data.adjacency);
  // Reconstruction target is A + I: self-links count as positives.
  std::span<const float> adj = data.adjacency.data();
  std::vector<float> tgt(adj.begin(), adj.end());
  for (int i = 0; i < n; ++i) tgt[static_cast<size_t>(i) * n + i] = 1.0f;
  double n_pos = 0.0;
  for (float t : tgt) n_pos += t;
  const double n_total = static_cast<double>(n) * n;
  if (n_pos >= n_total) {
    throw std::runtime_error("train_gae: view '" + view.view_name +
                             "' has no negative pairs to contrast against");
  }
  const float pos_weight = static_cast<float>((n_total - n_pos) / n_pos);
  const float norm = static_cast<float>(n_total / (2.0 * (n_total - n_pos)));
  Tensor target = Tensor::from_data({n, n}, std::move(tgt));

  Rng rng(seed);
  GaeModel model = GaeModel::init(n, cfg, rng);
  Adam opt(model.params("gae"), cfg.lr);

  GaeTrainResult result;
  result.initial_loss = 0.0f;
  result.final_loss = 0.0f;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.zero_grad();
    Tensor z = gae_forward(model, a_norm, data.features);
    Tensor loss = weighted_bce_with_logits(matmul(z, transpose(z)), target, pos_weight, norm);
    if (!loss.all_finite()) {
      throw std::runtime_error("train_gae: non-finite loss at epoch " + std::to_string(epoch) +
                               " on view '" + view.view_name + "'");
    }
    if (epoch == 0) result.initial_loss = loss.value();
    backward(loss);
    opt.step();
  }

  Tensor z = gae_forward(model, a_norm, data.features);
  Tensor final_loss =
      weighted_bce_with_logits(matmul(z, transpose(z)), target, pos_weight, norm);
  result.final_loss = final_loss.value();

  std::vector<int> class_rows(view.n_classes());
  for (int c = 0; c < view.n_classes(); ++c) class_rows[c] = c;
  result.embedding.view_name = view.view_name;
  result.embedding.class_order = view.class_names;
  result.embedding.vectors = gather_rows(z, class_rows).detached_copy();
  return result;
}

// ---- GAT ----------------------------------------------------------------------

GatModel GatModel::init(int n_features, const GatConfig& cfg, Rng& rng) {
  if (cfg.heads < 1 || cfg.hidden < 1 || cfg.out < 1) {
    throw std::invalid_argument("GatModel::init: layer sizes must be positive");
  }
  if (cfg.hidden % cfg.heads != 0) {
    throw std::invalid_argument("GatModel::init: hidden width " + std::to_string(cfg.hidden) +
                                " is not divisible by " + std::to_string(cfg.heads) + " heads");
  }
  const int per_head = cfg.hidden / cfg.heads;
  GatModel m;
  m.cfg = cfg;
  for (int h = 0; h < cfg.heads; ++h) {
    m.w1.push_back(glorot(n_features, per_head, rng));
    m.a1_src.push_back(glorot(per_head, 1, rng));
    m.a1_dst.push_back(glorot(per_head, 1, rng));
  }
  for (int h = 0; h < cfg.heads; ++h) {
    m.w2.push_back(glorot(cfg.hidden, cfg.out, rng));
    m.a2_src.push_back(glorot(cfg.out, 1, rng));
    m.a2_dst.push_back(glorot(cfg.out, 1, rng));
  }
  return m;
}

ParamList GatModel::params(const std::string& prefix) const {
  ParamList out;
  for (int h = 0; h < cfg.heads; ++h) {
    const std::string tag = prefix + ".l1.h" + std::to_string(h);
    out.push_back({tag + ".w", w1[h]});
    out.push_back({tag + ".a_src", a1_src[h]});
    out.push_back({tag + ".a_dst", a1_dst[h]});
  }
  for (int h = 0; h < cfg.heads; ++h) {
    const std::string tag = prefix + ".l2.h" + std::to_string(h);
    out.push_back({tag + ".w", w2[h]});
    out.push_back({tag + ".a_src", a2_src[h]});
    out.push_back({tag + ".a_dst", a2_dst[h]});
  }
  return out;
}

namespace {

// One masked attention head: projects, scores all ordered pairs with
// src/dst halves, keeps only A + I neighborhoods and row-normalizes.
std::pair<Tensor, Tensor> attention_head(const Tensor& x, const Tensor& w,
                                         const Tensor& a_src, const Tensor& a_dst,
                                         const Tensor& mask_bias, float slope) {
  Tensor h = matmul(x, w);                                   // (n, d)
  Tensor scores = add(matmul(h, a_src), transpose(matmul(h, a_dst)));  // (n,1)+(1,n)
  Tensor alpha = softmax_rows(add(leaky_relu(scores, slope), mask_bias));
  return {matmul(alpha, h), alpha};
}

}  // namespace

GatForward gat_forward(const GatModel& m, const Tensor& adjacency, const Tensor& x) {
  if (adjacency.rank() != 2 || adjacency.dim(0) != adjacency.dim(1)) {
    throw std::invalid_argument("gat_forward: adjacency must be square");
  }
  const int n = adjacency.dim(0);
  if (x.rank() != 2 || x.dim(0) != n) {
    throw std::invalid_argument("gat_forward: features must have one row per node");
  }
  // Additive mask: 0 on A + I entries, -1e9 elsewhere, so softmax ignores
  // non-neighbors. Every node can attend to itself.
  std::vector<float> bias(static_cast<size_t>(n) * n);
  std::span<const float> av = adjacency.data();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool edge = (i == j) || av[i * n + j] != 0.0f;
      bias[static_cast<size_t>(i) * n + j] = edge ? 0.0f : -1e9f;
    }
  }
  Tensor mask_bias = Tensor::from_data({n, n}, std::move(bias));

  GatForward out;
  std::vector<Tensor> head_outs;
  for (int h = 0; h < m.cfg.heads; ++h) {
    auto [o, alpha] =
        attention_head(x, m.w1[h], m.a1_src[h], m.a1_dst[h], mask_bias, m.cfg.slope);
    head_outs.push_back(o);
    out.attention.push_back(alpha);
  }
  Tensor layer1 = elu(concat(head_outs, 1));  // (n, hidden)

  Tensor avg;
  for (int h = 0; h < m.cfg.heads; ++h) {
    auto [o, alpha] =
        attention_head(layer1, m.w2[h], m.a2_src[h], m.a2_dst[h], mask_bias, m.cfg.slope);
    avg = avg.defined() ? add(avg, o) : o;
    out.attention.push_back(alpha);
  }
  out.z = l2_normalize_rows(mul_scalar(avg, 1.0f / static_cast<float>(m.cfg.heads)));
  return out;
}

KgEmbedding embed_view(const kg::ViewSubgraph& view, const std::string& method,
                       std::uint64_t seed) {
  if (method == "gae") {
    GaeConfig cfg;
    return train_gae(view, cfg, seed).embedding;
  }
  if (method == "gat") {
    kg::AdjacencyData data = kg::to_adjacency(view);
    Rng rng(seed);
    GatModel model = GatModel::init(view.n_nodes(), GatConfig{}, rng);
    GatForward fwd = gat_forward(model, data.adjacency, data.features);
    std::vector<int> class_rows(view.n_classes());
    for (int c = 0; c < view.n_classes(); ++c) class_rows[c] = c;
    KgEmbedding e;
    e.view_name = view.view_name;
    e.class_order = view.class_names;
    e.vectors = gather_rows(fwd.z, class_rows).detached_copy();
    return e;
  }
  throw std::invalid_argument("embed_view: unknown method '" + method +
                              "' (expected gae or gat)");
}

}  // namespace ctxf::kge
