#include "ctxf/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "ctxf/analysis.hpp"
#include "ctxf/checkpoint.hpp"
#include "ctxf/gkg.hpp"
#include "ctxf/io.hpp"
#include "ctxf/synthetic_spec.hpp"

namespace fs = std::filesystem;

namespace ctxf::pipeline {

namespace {

const std::set<std::string> kViews = {"visual", "taxonomical", "functional",
                                      "full"};
const std::set<std::string> kModes = {"trainer", "peer", "baseline"};

// Every key the experiment schema understands; anything else is a typo.
const std::set<std::string> kKnownKeys = {
    "run.seed",          "run.out",
    "run.views",         "run.modes",
    "dataset.source",    "dataset.cifar_dir",
    "dataset.train_per_class", "dataset.test_per_class",
    "dataset.target_swap",
    "dataset.shift.brightness", "dataset.shift.size_scale",
    "dataset.shift.background_swap", "dataset.shift.noise_std",
    "kg.source",         "kg.path",
    "embed.method",      "embed.hidden",
    "embed.out",         "embed.epochs",
    "embed.lr",
    "train.tau",         "train.epochs",
    "train.batch_size",  "train.lr",
    "train.lr_decay",
    "encoder.widths",    "encoder.stem_stride",
    "encoder.head_hidden",
    "gat.hidden",        "gat.heads",
    "head.lambda",       "head.epochs",
    "head.lr",
};

bool shift_is_identity(const data::DomainShift& s) {
  return s.brightness == 0.0f && s.size_scale == 1.0f && !s.background_swap &&
         s.noise_std == 0.0f;
}

void ensure_out_dir(const Experiment& exp) {
  fs::create_directories(exp.out_dir);
}

std::string join(const Experiment& exp, const std::string& file) {
  return (fs::path(exp.out_dir) / file).string();
}

// The shared source of truth for target-domain supercategories.
std::map<std::string, std::string> synthetic_supercategories() {
  std::map<std::string, std::string> out;
  for (const synthetic::ClassSpec& c : synthetic::default_spec().classes)
    out[c.name] = c.supercategory;
  const synthetic::ClassSpec extra = synthetic::target_only_class();
  out[extra.name] = extra.supercategory;
  return out;
}

kg::KnowledgeGraph view_as_graph(const kg::ViewSubgraph& view) {
  kg::KnowledgeGraph g;
  g.set_classes(view.class_names);
  for (const kg::Triple& t : view.triples)
    g.add(t.head, t.relation.id, t.tail);
  return g;
}

struct NamedModel {
  std::string mode;
  std::string view;  // empty for baseline
  std::string name;
};

// Requested models in declaration order; baseline appears exactly once.
std::vector<NamedModel> requested_models(const Experiment& exp) {
  std::vector<NamedModel> out;
  for (const std::string& mode : exp.modes) {
    if (mode == "baseline") {
      out.push_back({mode, "", "baseline"});
      continue;
    }
    for (const std::string& view : exp.views)
      out.push_back({mode, view, model_name(mode, view)});
  }
  return out;
}

}  // namespace

Experiment load_experiment(const config::Config& c) {
  for (const auto& [key, value] : c.entries())
    if (!kKnownKeys.count(key))
      throw std::invalid_argument("config: unknown key '" + key + "'");

  Experiment e;
  if (!c.has("run.seed"))
    throw std::invalid_argument(
        "config: required key 'run.seed' is missing (every run must pin its "
        "randomness)");
  e.seed = c.get_u64("run.seed", 0);
  e.out_dir = c.get("run.out", "out");
  e.views = c.get_list("run.views", "visual");
  e.modes = c.get_list("run.modes", "trainer,baseline");
  for (const std::string& v : e.views)
    if (!kViews.count(v))
      throw std::invalid_argument("config: unknown view '" + v + "'");
  for (const std::string& m : e.modes)
    if (!kModes.count(m))
      throw std::invalid_argument("config: unknown mode '" + m + "'");
  if (e.modes.empty())
    throw std::invalid_argument("config: run.modes must name at least one mode");
  const bool needs_views =
      std::any_of(e.modes.begin(), e.modes.end(),
                  [](const std::string& m) { return m != "baseline"; });
  if (needs_views && e.views.empty())
    throw std::invalid_argument(
        "config: at least one view+mode pair is required");

  e.dataset_source = c.get("dataset.source", "synthetic");
  if (e.dataset_source != "synthetic" && e.dataset_source != "cifar10")
    throw std::invalid_argument("config: dataset.source must be 'synthetic' or "
                                "'cifar10', got '" + e.dataset_source + "'");
  e.cifar_dir = c.get("dataset.cifar_dir", "");
  e.train_per_class = c.get_int("dataset.train_per_class", 200);
  e.test_per_class = c.get_int("dataset.test_per_class", 50);
  if (e.train_per_class < 1 || e.test_per_class < 1)
    throw std::invalid_argument("config: per-class sample counts must be >= 1");
  e.target_drop = c.get("dataset.target_swap", "");
  e.shift.brightness =
      static_cast<float>(c.get_double("dataset.shift.brightness", 0.0));
  e.shift.size_scale =
      static_cast<float>(c.get_double("dataset.shift.size_scale", 1.0));
  e.shift.background_swap = c.get_bool("dataset.shift.background_swap", false);
  e.shift.noise_std =
      static_cast<float>(c.get_double("dataset.shift.noise_std", 0.0));

  e.kg_source = c.get("kg.source", "bundled");
  if (e.kg_source != "bundled" && e.kg_source != "file")
    throw std::invalid_argument("config: kg.source must be 'bundled' or "
                                "'file', got '" + e.kg_source + "'");
  e.kg_path = c.get("kg.path", "");
  if (e.kg_source == "file" && e.kg_path.empty())
    throw std::invalid_argument("config: kg.source = file requires kg.path");

  e.embed_method = c.get("embed.method", "gae");
  if (e.embed_method != "gae" && e.embed_method != "gat")
    throw std::invalid_argument("config: embed.method must be 'gae' or "
                                "'gat', got '" + e.embed_method + "'");
  e.gae.hidden = c.get_int("embed.hidden", e.gae.hidden);
  e.gae.out = c.get_int("embed.out", e.gae.out);
  e.gae.epochs = c.get_int("embed.epochs", e.gae.epochs);
  e.gae.lr = static_cast<float>(c.get_double("embed.lr", e.gae.lr));

  e.train.tau = static_cast<float>(c.get_double("train.tau", e.train.tau));
  e.train.epochs = c.get_int("train.epochs", e.train.epochs);
  e.train.batch_size = c.get_int("train.batch_size", e.train.batch_size);
  e.train.lr = static_cast<float>(c.get_double("train.lr", e.train.lr));
  e.train.lr_decay =
      static_cast<float>(c.get_double("train.lr_decay", e.train.lr_decay));
  e.train.seed = e.seed;
  if (c.has("encoder.widths")) {
    std::vector<int> widths;
    for (const std::string& w : c.get_list("encoder.widths", "")) {
      size_t pos = 0;
      int v = 0;
      try {
        v = std::stoi(w, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != w.size() || v < 1)
        throw std::invalid_argument(
            "config: encoder.widths entry '" + w +
            "' is not a positive integer");
      widths.push_back(v);
    }
    if (widths.empty())
      throw std::invalid_argument("config: encoder.widths must be non-empty");
    e.train.encoder.widths = widths;
  }
  e.train.encoder.stem_stride =
      c.get_int("encoder.stem_stride", e.train.encoder.stem_stride);
  e.train.encoder.head_hidden =
      c.get_int("encoder.head_hidden", e.train.encoder.head_hidden);
  e.train.gat.hidden = c.get_int("gat.hidden", e.train.gat.hidden);
  e.train.gat.heads = c.get_int("gat.heads", e.train.gat.heads);

  e.head_lambda = c.get_double("head.lambda", e.head_lambda);
  e.head_epochs = c.get_int("head.epochs", e.head_epochs);
  e.head_lr = static_cast<float>(c.get_double("head.lr", e.head_lr));
  return e;
}

std::string model_name(const std::string& mode, const std::string& view) {
  return mode == "baseline" ? "baseline" : mode + "_" + view;
}

std::string graph_path(const Experiment& exp) { return join(exp, "gkg.kgt"); }

std::string view_file_path(const Experiment& exp, const std::string& view) {
  return join(exp, "gkg_" + view + ".kgt");
}

std::string embedding_path(const Experiment& exp, const std::string& view) {
  return join(exp, "emb_" + view + "_" + exp.embed_method + ".ctxe");
}

std::string checkpoint_path(const Experiment& exp, const std::string& mode,
                            const std::string& view) {
  return join(exp, "model_" + model_name(mode, view) + ".ctxf");
}

std::string training_log_path(const Experiment& exp, const std::string& mode,
                              const std::string& view) {
  return join(exp, "log_" + model_name(mode, view) + ".csv");
}

kg::KnowledgeGraph load_graph(const Experiment& exp) {
  if (exp.kg_source == "file") return kg::load_kgt(exp.kg_path);
  if (exp.dataset_source == "cifar10") return kg::build_cifar_gkg();
  return kg::build_synthetic_gkg(synthetic::default_spec());
}

DataBundle load_data(const Experiment& exp) {
  DataBundle b;
  if (exp.dataset_source == "cifar10") {
    if (exp.cifar_dir.empty())
      throw std::invalid_argument(
          "config: dataset.source = cifar10 requires dataset.cifar_dir");
    if (!exp.target_drop.empty())
      throw std::invalid_argument(
          "config: dataset.target_swap applies to synthetic data only");
    data::Cifar10 c10 = data::load_cifar10(exp.cifar_dir);
    b.train = std::move(c10.train);
    b.test_source = std::move(c10.test);
    if (!shift_is_identity(exp.shift)) {
      b.test_target = data::shift(b.test_source, exp.shift, exp.seed + 3);
      b.has_target = true;
    }
    return b;
  }

  const synthetic::Spec source = synthetic::default_spec();
  b.is_synthetic = true;
  b.supercategory = synthetic_supercategories();
  b.train = data::generate(source, exp.train_per_class, exp.seed);
  b.test_source = data::generate(source, exp.test_per_class, exp.seed + 1);

  const bool swap = !exp.target_drop.empty();
  if (swap || !shift_is_identity(exp.shift)) {
    const synthetic::Spec target_spec =
        swap ? data::make_target_spec(source, exp.target_drop,
                                      synthetic::target_only_class())
             : source;
    data::ImageDataset target =
        data::generate(target_spec, exp.test_per_class, exp.seed + 2);
    b.test_target = shift_is_identity(exp.shift)
                        ? std::move(target)
                        : data::shift(target, exp.shift, exp.seed + 3);
    b.has_target = true;
  }
  return b;
}

void run_kg_build(const Experiment& exp) {
  ensure_out_dir(exp);
  kg::KnowledgeGraph g = load_graph(exp);
  g.validate();
  kg::save_kgt(graph_path(exp), g);
}

void run_kg_query(const Experiment& exp, const std::string& view) {
  ensure_out_dir(exp);
  kg::KnowledgeGraph g = load_graph(exp);
  kg::ViewSubgraph sub = kg::extract_view(g, kg::standard_view(view, g));
  kg::save_kgt(view_file_path(exp, view), view_as_graph(sub));
}

std::string graph_stats(const kg::KnowledgeGraph& g) {
  std::string out;
  out += std::to_string(g.count_terms(kg::TermKind::Class)) + " classes\n";
  out += std::to_string(g.count_terms(kg::TermKind::Property)) + " properties\n";
  out +=
      std::to_string(g.count_terms(kg::TermKind::Individual)) + " individuals\n";
  out += std::to_string(g.triples().size()) + " triples\n";
  return out;
}

void run_embed(const Experiment& exp, const std::string& view,
               const std::string& method) {
  ensure_out_dir(exp);
  kg::KnowledgeGraph g = load_graph(exp);
  kg::ViewSubgraph sub = kg::extract_view(g, kg::standard_view(view, g));
  kge::KgEmbedding emb;
  if (method == "gae") {
    emb = kge::train_gae(sub, exp.gae, exp.seed).embedding;
  } else {
    // embed_view also rejects unknown method names.
    emb = kge::embed_view(sub, method, exp.seed);
  }
  kge::save_embedding(
      join(exp, "emb_" + view + "_" + method + ".ctxe"), emb);
  analysis::SimilarityMatrix sim =
      analysis::cosine_matrix(emb.vectors, emb.class_order);
  analysis::emit_heatmap(sim, join(exp, "sim_kge_" + view + "_" + method));
}

void run_train(const Experiment& exp, std::ostream& diag) {
  ensure_out_dir(exp);
  DataBundle bundle = load_data(exp);

  for (const NamedModel& req : requested_models(exp)) {
    infusion::TrainedModel model;
    if (req.mode == "baseline") {
      diag << "warning: baseline mode ignores the kg section\n";
      model = infusion::train_supcon_baseline(bundle.train, exp.train);
    } else if (req.mode == "trainer") {
      const std::string emb_path = embedding_path(exp, req.view);
      if (!fs::exists(emb_path))
        throw std::runtime_error(
            "train: embedding file '" + emb_path + "' for view '" + req.view +
            "' not found; run the embed command for this view first");
      kge::KgEmbedding emb = kge::load_embedding(emb_path);
      model = infusion::train_with_kg_trainer(bundle.train, emb, exp.train);
    } else {  // peer
      kg::KnowledgeGraph g = load_graph(exp);
      kg::ViewSubgraph sub =
          kg::extract_view(g, kg::standard_view(req.view, g));
      model = infusion::train_with_kg_peer(bundle.train, sub, exp.train);
    }

    ParamList params = model.encoder.params("encoder");
    if (model.class_embedding.defined())
      params.push_back({"class_embedding", model.class_embedding});
    if (model.has_gat)
      for (Param& p : model.gat.params("gat")) params.push_back(p);
    save_checkpoint(checkpoint_path(exp, req.mode, req.view), params);
    infusion::write_training_log(training_log_path(exp, req.mode, req.view),
                                 model.log);
    diag << "trained " << req.name << ": final mean loss "
         << model.log.back().mean_loss << "\n";
  }
}

enc::EncoderModel load_encoder_checkpoint(const std::string& path,
                                          const enc::EncoderConfig& cfg) {
  Rng rng(0);
  enc::EncoderModel m = enc::EncoderModel::init(cfg, rng);
  ParamList stored = load_checkpoint(path);
  std::map<std::string, const Tensor*> by_name;
  for (const Param& p : stored) by_name[p.name] = &p.tensor;
  for (Param& p : m.params("encoder")) {
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint '" + path + "' lacks parameter '" +
                               p.name + "'; encoder config does not match");
    if (it->second->shape() != p.tensor.shape())
      throw std::runtime_error("checkpoint '" + path + "' parameter '" +
                               p.name + "' has a mismatched shape");
    auto src = it->second->data();
    auto dst = p.tensor.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return m;
}

namespace {

struct RobustnessStat {
  long errors = 0;
  long within = 0;
  double fraction() const {
    return errors == 0 ? 1.0 : static_cast<double>(within) / errors;
  }
};

RobustnessStat robustness_stat(
    const pred::EvalResult& r,
    const std::map<std::string, std::string>& supercategory) {
  RobustnessStat s;
  for (size_t t = 0; t < r.true_classes.size(); ++t) {
    if (!r.in_head[t]) continue;
    for (size_t p = 0; p < r.pred_classes.size(); ++p) {
      if (r.pred_classes[p] == r.true_classes[t]) continue;
      const int count = r.confusion[t][p];
      if (count == 0) continue;
      auto ts = supercategory.find(r.true_classes[t]);
      auto ps = supercategory.find(r.pred_classes[p]);
      if (ts == supercategory.end() || ps == supercategory.end())
        throw std::invalid_argument(
            "robustness: no supercategory for class '" +
            (ts == supercategory.end() ? r.true_classes[t]
                                       : r.pred_classes[p]) +
            "'");
      s.errors += count;
      if (ts->second == ps->second) s.within += count;
    }
  }
  return s;
}

}  // namespace

double within_supercategory_error_fraction(
    const pred::EvalResult& r,
    const std::map<std::string, std::string>& supercategory) {
  return robustness_stat(r, supercategory).fraction();
}

void run_eval(const Experiment& exp, std::ostream& diag) {
  ensure_out_dir(exp);
  DataBundle bundle = load_data(exp);

  struct Evaluated {
    std::string name;
    pred::EvalResult gp_source, ll_source;
    pred::EvalResult gp_target, ll_target;
  };
  std::vector<Evaluated> results;
  bool have_baseline = false;

  for (const NamedModel& req : requested_models(exp)) {
    const std::string ckpt = checkpoint_path(exp, req.mode, req.view);
    if (!fs::exists(ckpt))
      throw std::runtime_error("eval: checkpoint '" + ckpt +
                               "' not found; run the train command first");
    enc::EncoderModel encoder =
        load_encoder_checkpoint(ckpt, exp.train.encoder);

    Tensor ztrain = enc::embed_images(encoder, bundle.train.images);
    pred::GaussianHead gp =
        pred::fit_gaussian(ztrain, bundle.train.labels,
                           bundle.train.class_names, exp.head_lambda);
    pred::LinearHead ll =
        pred::fit_linear(ztrain, bundle.train.labels, bundle.train.class_names,
                         exp.head_epochs, exp.head_lr, exp.seed);

    Evaluated ev;
    ev.name = req.name;
    auto eval_domain = [&](const data::ImageDataset& d,
                           pred::EvalResult& out_gp, pred::EvalResult& out_ll) {
      Tensor ztest = enc::embed_images(encoder, d.images);
      out_gp = pred::evaluate(
          pred::argmax_rows(pred::predict_gaussian(gp, ztest)), gp.class_names,
          d);
      out_ll = pred::evaluate(
          pred::argmax_rows(pred::predict_linear(ll, ztest)), ll.class_names,
          d);
    };
    eval_domain(bundle.test_source, ev.gp_source, ev.ll_source);
    if (bundle.has_target)
      eval_domain(bundle.test_target, ev.gp_target, ev.ll_target);

    // Class-mean similarity heatmaps per domain.
    Tensor src_means = analysis::class_mean_embeddings(encoder, bundle.test_source);
    analysis::emit_heatmap(
        analysis::cosine_matrix(src_means, bundle.test_source.class_names),
        join(exp, "sim_classmean_" + req.name + "_source"));
    if (bundle.has_target) {
      Tensor tgt_means =
          analysis::class_mean_embeddings(encoder, bundle.test_target);
      analysis::emit_heatmap(
          analysis::cosine_matrix(tgt_means, bundle.test_target.class_names),
          join(exp, "sim_classmean_" + req.name + "_target"));
    }

    if (req.name == "baseline") have_baseline = true;
    results.push_back(std::move(ev));
    diag << "evaluated " << req.name << ": source accuracy gp "
         << results.back().gp_source.overall_accuracy << ", ll "
         << results.back().ll_source.overall_accuracy << "\n";
  }

  // Accuracy tables (baseline row first when present).
  std::stable_sort(results.begin(), results.end(),
                   [](const Evaluated& a, const Evaluated& b) {
                     return (a.name == "baseline") > (b.name == "baseline");
                   });
  auto write_tables = [&](const std::string& domain,
                          const std::vector<std::string>& classes,
                          auto pick_gp, auto pick_ll) {
    std::vector<pred::AccuracyRow> gp_rows, ll_rows;
    for (const Evaluated& ev : results) {
      gp_rows.push_back(pred::to_accuracy_row(ev.name, pick_gp(ev)));
      ll_rows.push_back(pred::to_accuracy_row(ev.name, pick_ll(ev)));
    }
    pred::write_accuracy_csv(join(exp, "accuracy_gp_" + domain + ".csv"),
                             classes, gp_rows);
    pred::write_accuracy_csv(join(exp, "accuracy_ll_" + domain + ".csv"),
                             classes, ll_rows);
    if (have_baseline && results.size() > 1) {
      std::vector<pred::AccuracyRow> gp_models(gp_rows.begin() + 1,
                                               gp_rows.end());
      std::vector<pred::AccuracyRow> ll_models(ll_rows.begin() + 1,
                                               ll_rows.end());
      analysis::write_delta_csv(
          join(exp, "delta_gp_" + domain + ".csv"),
          analysis::delta_table(gp_rows.front(), gp_models, classes));
      analysis::write_delta_csv(
          join(exp, "delta_ll_" + domain + ".csv"),
          analysis::delta_table(ll_rows.front(), ll_models, classes));
    }
  };
  write_tables(
      "source", bundle.test_source.class_names,
      [](const Evaluated& e) -> const pred::EvalResult& { return e.gp_source; },
      [](const Evaluated& e) -> const pred::EvalResult& { return e.ll_source; });
  if (bundle.has_target)
    write_tables(
        "target", bundle.test_target.class_names,
        [](const Evaluated& e) -> const pred::EvalResult& { return e.gp_target; },
        [](const Evaluated& e) -> const pred::EvalResult& { return e.ll_target; });

  // Robustness of target-domain errors for synthetic data: how often a
  // misclassification at least lands in the right supercategory.
  if (bundle.has_target && bundle.is_synthetic) {
    std::string csv = "model,head,errors,within_supercategory,fraction\n";
    for (const Evaluated& ev : results) {
      const std::pair<const char*, const pred::EvalResult*> heads[] = {
          {"gp", &ev.gp_target}, {"ll", &ev.ll_target}};
      for (const auto& [head, res] : heads) {
        RobustnessStat s = robustness_stat(*res, bundle.supercategory);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%ld,%ld,%.6f", s.errors, s.within,
                      s.fraction());
        csv += ev.name + "," + head + "," + buf + "\n";
      }
    }
    io::write_file(join(exp, "robustness_target.csv"), csv);
  }
}

}  // namespace ctxf::pipeline
