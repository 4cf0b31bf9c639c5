#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "ctxf/datasets.hpp"
#include "ctxf/encoder.hpp"
#include "ctxf/gkg.hpp"
#include "ctxf/infusion.hpp"
#include "ctxf/io.hpp"
#include "ctxf/kg.hpp"
#include "ctxf/kge.hpp"
#include "ctxf/synthetic_spec.hpp"
#include "oracles.hpp"

using namespace ctxf;
using namespace ctxf::infusion;

namespace {

// Random unit rows plus the same data in oracle-friendly nested vectors.
struct UnitRows {
  Tensor t;
  std::vector<std::vector<double>> v;
};

UnitRows random_unit_rows(int n, int d, Rng& rng) {
  std::vector<float> flat(static_cast<size_t>(n) * d);
  std::vector<std::vector<double>> nested(n, std::vector<double>(d));
  for (int i = 0; i < n; ++i) {
    double norm2 = 0.0;
    for (int k = 0; k < d; ++k) {
      nested[i][k] = rng.normal();
      norm2 += nested[i][k] * nested[i][k];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (int k = 0; k < d; ++k) {
      nested[i][k] *= inv;
      flat[static_cast<size_t>(i) * d + k] = static_cast<float>(nested[i][k]);
    }
  }
  return {Tensor::from_data({n, d}, std::move(flat)), std::move(nested)};
}

// Paired labels (2i, 2i+1 equal) over n_classes, ensuring >= 2 classes.
std::vector<int> paired_labels(int n_source, int n_classes, Rng& rng) {
  std::vector<int> labels;
  for (int i = 0; i < n_source; ++i) {
    const int c = (i < 2) ? i % n_classes : rng.randint(n_classes);
    labels.push_back(c);
    labels.push_back(c);
  }
  return labels;
}

// A four-class linearly separable toy spec (two supercategories).
synthetic::Spec four_class_spec() {
  return synthetic::Spec{{
      {"ruby", "rounded", "circle", "red", "uniform", "dark"},
      {"sun", "rounded", "circle", "yellow", "uniform", "light"},
      {"sky", "angular", "square", "blue", "uniform", "dark"},
      {"leaf", "angular", "triangle", "green", "uniform", "light"},
  }};
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 8;
  cfg.encoder.widths = {4, 8};
  cfg.encoder.head_hidden = 32;
  cfg.gat.hidden = 16;
  cfg.gat.heads = 2;
  cfg.gat.out = 128;
  return cfg;
}

double mean_anchor_cosine(const enc::EncoderModel& m, const Tensor& class_emb,
                          const data::ImageDataset& d) {
  Tensor z = enc::embed_images(m, d.images);
  auto zv = z.data();
  auto ev = class_emb.data();
  const int dim = z.dim(1);
  double total = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    double dot = 0.0;
    for (int k = 0; k < dim; ++k)
      dot += static_cast<double>(zv[i * dim + k]) * ev[d.labels[i] * dim + k];
    total += dot;
  }
  return total / d.n();
}

}  // namespace

TEST_SUITE_BEGIN("infusion");

TEST_CASE("kg loss matches the double-loop reference on random batches") {
  Rng rng(100);
  for (int trial = 0; trial < 25; ++trial) {
    const int n_source = 2 + rng.randint(7);  // N in [2, 8]
    const int n_classes = 2 + rng.randint(3);
    const float tau = std::vector<float>{0.05f, 0.1f, 1.0f}[rng.randint(3)];
    std::vector<int> labels = paired_labels(n_source, n_classes, rng);

    UnitRows emb = random_unit_rows(n_classes, 16, rng);
    UnitRows z = random_unit_rows(2 * n_source, 16, rng);
    std::vector<std::vector<double>> anchors;
    for (int l : labels) anchors.push_back(emb.v[l]);

    const double ref = oracles::alignment_loss_ref(anchors, z.v, labels, tau);
    const double got = kg_contrastive_loss(emb.t, z.t, labels, tau).value();
    CHECK(std::abs(got - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("supcon baseline matches the double-loop reference") {
  Rng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const int n_source = 2 + rng.randint(7);
    const int n_classes = 2 + rng.randint(3);
    const float tau = std::vector<float>{0.05f, 0.1f, 1.0f}[rng.randint(3)];
    std::vector<int> labels = paired_labels(n_source, n_classes, rng);
    UnitRows z = random_unit_rows(2 * n_source, 16, rng);

    const double ref = oracles::alignment_loss_ref(z.v, z.v, labels, tau);
    const double got = supcon_baseline_loss(z.t, labels, tau).value();
    CHECK(std::abs(got - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("perfectly aligned single-positive pair has zero loss") {
  // Both views equal the class anchor; the lone softmax term is its own
  // denominator, so each anchor contributes exactly log(1) = 0.
  std::vector<float> e = {1.0f, 0.0f, 0.0f, 0.0f};
  Tensor emb = Tensor::from_data({1, 4}, std::vector<float>(e));
  Tensor z = Tensor::from_data({2, 4}, {1.0f, 0.0f, 0.0f, 0.0f, 1.0f, 0.0f, 0.0f, 0.0f});
  const double loss = kg_contrastive_loss(emb, z, {0, 0}, 0.1f).value();
  CHECK(std::abs(loss) < 1e-10);
}

TEST_CASE("temperature to infinity approaches the uniform-softmax limit") {
  Rng rng(102);
  const int n_source = 5;
  std::vector<int> labels = paired_labels(n_source, 3, rng);
  UnitRows emb = random_unit_rows(3, 16, rng);
  UnitRows z = random_unit_rows(2 * n_source, 16, rng);

  // Every anchor with positives tends to log(2N - 1) per positive, averaged
  // over positives.
  const int m = 2 * n_source;
  double expected = 0.0;
  for (int i = 0; i < m; ++i) {
    int pos = 0;
    for (int j = 0; j < m; ++j)
      if (j != i && labels[j] == labels[i]) ++pos;
    if (pos > 0) expected += std::log(static_cast<double>(m - 1));
  }
  const double got = kg_contrastive_loss(emb.t, z.t, labels, 1e6f).value();
  CHECK(std::abs(got - expected) < 1e-3);
}

TEST_CASE("orthogonal-class supcon batch has a closed-form loss") {
  // Two classes, two identical unit views each, mutually orthogonal, tau = 1:
  // every anchor sees one positive at similarity 1 and two negatives at 0,
  // so each of the four anchors contributes log(e + 2) - 1.
  Tensor z = Tensor::from_data({4, 2}, {1.0f, 0.0f, 1.0f, 0.0f, 0.0f, 1.0f, 0.0f, 1.0f});
  const double got = supcon_baseline_loss(z, {0, 0, 1, 1}, 1.0f).value();
  const double expected = 4.0 * (std::log(std::exp(1.0) + 2.0) - 1.0);
  CHECK(got == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("loss is invariant under batch permutation") {
  Rng rng(103);
  const int n_source = 6;
  std::vector<int> labels = paired_labels(n_source, 3, rng);
  UnitRows emb = random_unit_rows(3, 16, rng);
  UnitRows z = random_unit_rows(2 * n_source, 16, rng);
  const double base = kg_contrastive_loss(emb.t, z.t, labels, 0.1f).value();
  const double base_sup = supcon_baseline_loss(z.t, labels, 0.1f).value();

  std::vector<int> perm(2 * n_source);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<float> zp(z.t.numel());
  std::vector<int> lp(labels.size());
  auto zv = z.t.data();
  for (size_t i = 0; i < perm.size(); ++i) {
    lp[i] = labels[perm[i]];
    std::memcpy(zp.data() + i * 16, zv.data() + static_cast<size_t>(perm[i]) * 16,
                16 * sizeof(float));
  }
  Tensor zperm = Tensor::from_data({2 * n_source, 16}, std::move(zp));
  CHECK(kg_contrastive_loss(emb.t, zperm, lp, 0.1f).value() ==
        doctest::Approx(base).epsilon(1e-6));
  CHECK(supcon_baseline_loss(zperm, lp, 0.1f).value() ==
        doctest::Approx(base_sup).epsilon(1e-6));
}

TEST_CASE("loss is invariant under a simultaneous rotation") {
  Rng rng(104);
  const int d = 8;
  const int n_source = 5;
  std::vector<int> labels = paired_labels(n_source, 3, rng);
  UnitRows emb = random_unit_rows(3, d, rng);
  UnitRows z = random_unit_rows(2 * n_source, d, rng);
  const double base = kg_contrastive_loss(emb.t, z.t, labels, 0.1f).value();

  // Random orthogonal matrix via Gram-Schmidt on a random square matrix.
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (auto& row : q)
    for (double& x : row) x = rng.normal();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += q[i][k] * q[j][k];
      for (int k = 0; k < d; ++k) q[i][k] -= dot * q[j][k];
    }
    double norm = 0.0;
    for (int k = 0; k < d; ++k) norm += q[i][k] * q[i][k];
    norm = std::sqrt(norm);
    for (int k = 0; k < d; ++k) q[i][k] /= norm;
  }
  auto rotate = [&](const Tensor& t) {
    std::vector<float> out(t.numel());
    auto v = t.data();
    for (int i = 0; i < t.dim(0); ++i)
      for (int a = 0; a < d; ++a) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += v[i * d + k] * q[a][k];
        out[static_cast<size_t>(i) * d + a] = static_cast<float>(s);
      }
    return Tensor::from_data({t.dim(0), d}, std::move(out));
  };
  const double rotated =
      kg_contrastive_loss(rotate(emb.t), rotate(z.t), labels, 0.1f).value();
  CHECK(rotated == doctest::Approx(base).epsilon(1e-5));
}

TEST_CASE("loss wrappers validate their inputs") {
  Rng rng(105);
  UnitRows emb = random_unit_rows(2, 8, rng);
  UnitRows z = random_unit_rows(4, 8, rng);
  CHECK_THROWS_WITH_AS(kg_contrastive_loss(emb.t, z.t, {0, 0, 1, 3}, 0.1f),
                       doctest::Contains("no class embedding"), std::invalid_argument);
  Tensor not_unit = Tensor::full({4, 8}, 0.3f);
  CHECK_THROWS_WITH_AS(kg_contrastive_loss(emb.t, not_unit, {0, 0, 1, 1}, 0.1f),
                       doctest::Contains("unit-norm"), std::invalid_argument);
  CHECK_THROWS_AS(supcon_baseline_loss(z.t, {0, 0, 1, 1}, -1.0f), std::invalid_argument);

  ContrastiveBatch bad;
  bad.n_source = 2;
  bad.views.resize(4, img::Image::zeros(3, 32, 32));
  bad.labels = {0, 1, 1, 0};  // pair labels disagree
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("disagree"), std::invalid_argument);
  bad.labels = {0, 0, 0, 0};
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("distinct"), std::invalid_argument);
  bad.n_source = 1;
  bad.views.resize(2);
  bad.labels = {0, 0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("trainer mode learns and never touches the class embedding") {
  synthetic::Spec spec = four_class_spec();
  data::ImageDataset train = data::generate(spec, 6, 0);
  kg::KnowledgeGraph g = kg::build_synthetic_gkg(spec);
  kg::ViewSubgraph view = kg::extract_view(g, kg::standard_view("visual", g));
  kge::GaeConfig gae_cfg;
  gae_cfg.epochs = 120;
  kge::KgEmbedding emb = kge::train_gae(view, gae_cfg, 0).embedding;
  std::vector<float> frozen(emb.vectors.data().begin(), emb.vectors.data().end());

  TrainConfig cfg = tiny_train_config();
  TrainedModel model = train_with_kg_trainer(train, emb, cfg);

  REQUIRE(model.log.size() == 6);
  CHECK(model.log.back().mean_loss < model.log.front().mean_loss);
  CHECK_FALSE(model.has_gat);

  // Frozen anchors: input embedding unchanged, and the model's copy matches
  // it row for row (class order here equals embedding order).
  CHECK(std::memcmp(frozen.data(), emb.vectors.data().data(),
                    frozen.size() * sizeof(float)) == 0);
  CHECK(std::memcmp(model.class_embedding.data().data(), frozen.data(),
                    frozen.size() * sizeof(float)) == 0);

  // Cosine alignment between image embeddings and their class anchors
  // improves over a fresh untrained encoder.
  Rng fresh_rng(cfg.seed);
  enc::EncoderModel fresh = enc::EncoderModel::init(cfg.encoder, fresh_rng);
  const double before = mean_anchor_cosine(fresh, model.class_embedding, train);
  const double after = mean_anchor_cosine(model.encoder, model.class_embedding, train);
  CHECK(after > before);
}

TEST_CASE("training logs are deterministic for a fixed seed") {
  synthetic::Spec spec = four_class_spec();
  data::ImageDataset train = data::generate(spec, 4, 1);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 3;
  TrainedModel a = train_supcon_baseline(train, cfg);
  TrainedModel b = train_supcon_baseline(train, cfg);
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].mean_loss == b.log[i].mean_loss);
    CHECK(a.log[i].lr == b.log[i].lr);
  }
  // Learned parameters agree bitwise.
  ParamList pa = a.encoder.params("e"), pb = b.encoder.params("e");
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(std::memcmp(pa[i].tensor.data().data(), pb[i].tensor.data().data(),
                      pa[i].tensor.numel() * sizeof(float)) == 0);
  }

  cfg.seed = 9;
  TrainedModel c = train_supcon_baseline(train, cfg);
  CHECK(c.log.front().mean_loss != a.log.front().mean_loss);
}

TEST_CASE("peer mode moves the attention parameters") {
  synthetic::Spec spec = four_class_spec();
  data::ImageDataset train = data::generate(spec, 4, 2);
  kg::KnowledgeGraph g = kg::build_synthetic_gkg(spec);
  kg::ViewSubgraph view = kg::extract_view(g, kg::standard_view("full", g));

  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 3;

  // Snapshot a fresh GAT initialized exactly as the trainer will.
  Rng rng(cfg.seed);
  enc::EncoderModel dummy = enc::EncoderModel::init(cfg.encoder, rng);
  kge::GatModel fresh = kge::GatModel::init(view.n_nodes(), cfg.gat, rng);

  TrainedModel model = train_with_kg_peer(train, view, cfg);
  REQUIRE(model.has_gat);
  CHECK(model.class_embedding.shape() == Shape{4, 128});

  double delta = 0.0;
  ParamList before = fresh.params("g"), after = model.gat.params("g");
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) {
    auto bv = before[i].tensor.data();
    auto av = after[i].tensor.data();
    REQUIRE(bv.size() == av.size());
    for (size_t k = 0; k < bv.size(); ++k)
      delta += std::abs(static_cast<double>(av[k]) - bv[k]);
  }
  CHECK(delta > 0.0);

  // The stored class embedding is the final GAT output, rows unit-norm.
  auto ev = model.class_embedding.data();
  for (int c = 0; c < 4; ++c) {
    double n2 = 0.0;
    for (int k = 0; k < 128; ++k)
      n2 += static_cast<double>(ev[c * 128 + k]) * ev[c * 128 + k];
    CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("trainer mode requires embeddings for all sampled classes") {
  synthetic::Spec spec = four_class_spec();
  data::ImageDataset train = data::generate(spec, 3, 3);
  kge::KgEmbedding emb;
  emb.view_name = "visual";
  emb.class_order = {"ruby", "sun", "sky"};  // "leaf" missing
  Rng rng(0);
  emb.vectors = l2_normalize_rows(Tensor::randn({3, 128}, rng, 1.0f)).detached_copy();
  TrainConfig cfg = tiny_train_config();
  CHECK_THROWS_WITH_AS(train_with_kg_trainer(train, emb, cfg),
                       doctest::Contains("no class embedding for 'leaf'"),
                       std::invalid_argument);
}

TEST_CASE("peer mode requires the view to cover the dataset classes") {
  synthetic::Spec spec = four_class_spec();
  data::ImageDataset train = data::generate(spec, 3, 4);
  kg::KnowledgeGraph g = kg::build_synthetic_gkg(synthetic::default_spec());
  kg::ViewSubgraph view = kg::extract_view(g, kg::standard_view("visual", g));
  TrainConfig cfg = tiny_train_config();
  CHECK_THROWS_WITH_AS(train_with_kg_peer(train, view, cfg),
                       doctest::Contains("do not match"), std::invalid_argument);
}

TEST_CASE("training log file format") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "ctxf_log_test";
  fs::create_directories(dir);
  const std::string path = (dir / "log.csv").string();
  std::vector<EpochStats> log = {{0, 3.25, 0.001, 12.5}, {1, 2.75, 0.00055, 11.25}};
  write_training_log(path, log);
  const std::string text = io::read_text_file(path);
  CHECK(text ==
        "epoch,mean_loss,lr,wall_ms\n"
        "0,3.250000,0.00100000,12.500\n"
        "1,2.750000,0.00055000,11.250\n");
  fs::remove_all(dir);
}

TEST_SUITE_END();
