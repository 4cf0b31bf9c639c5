#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ctxf/config.hpp"
#include "ctxf/datasets.hpp"
#include "ctxf/infusion.hpp"
#include "ctxf/kg.hpp"
#include "ctxf/kge.hpp"
#include "ctxf/predict.hpp"

// Experiment orchestration shared by the command-line tool and the
// acceptance harness: materializes a declarative config into datasets,
// graphs, embeddings, trained models, and analysis artifacts under one
// output directory.
namespace ctxf::pipeline {

// A fully validated experiment description.
struct Experiment {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::vector<std::string> views;  // subset of visual|taxonomical|functional|full
  std::vector<std::string> modes;  // subset of trainer|peer|baseline

  std::string dataset_source = "synthetic";  // synthetic | cifar10
  std::string cifar_dir;
  int train_per_class = 200;
  int test_per_class = 50;
  std::string target_drop;  // optional class dropped from the target roster
  bool target_add = false;  // append the reserved target-only class
  data::DomainShift shift;

  std::string kg_source = "bundled";  // bundled | file
  std::string kg_path;                // .kgt path when kg_source == file

  std::string embed_method = "gae";  // gae | gat
  kge::GaeConfig gae;

  infusion::TrainConfig train;

  double head_lambda = 1e-3;
  int head_epochs = 200;
  float head_lr = 0.001f;
};

// Validates and materializes the experiment. Requires run.seed (no implicit
// randomness) and at least one view+mode pair.
Experiment load_experiment(const config::Config& c);

// Artifact locations, all under exp.out_dir.
std::string graph_path(const Experiment& exp);
std::string view_file_path(const Experiment& exp, const std::string& view);
std::string embedding_path(const Experiment& exp, const std::string& view);
std::string checkpoint_path(const Experiment& exp, const std::string& mode,
                            const std::string& view);
std::string training_log_path(const Experiment& exp, const std::string& mode,
                              const std::string& view);

// "baseline" for the baseline mode, otherwise "<mode>_<view>".
std::string model_name(const std::string& mode, const std::string& view);

// The experiment's knowledge graph: bundled (synthetic or CIFAR-style,
// following dataset.source) or loaded from kg.path.
kg::KnowledgeGraph load_graph(const Experiment& exp);

// Train/test data plus the optional shifted target domain.
struct DataBundle {
  data::ImageDataset train;
  data::ImageDataset test_source;
  data::ImageDataset test_target;  // valid only when has_target
  bool has_target = false;
  bool is_synthetic = false;
  std::map<std::string, std::string> supercategory;  // class -> supercategory
};

DataBundle load_data(const Experiment& exp);

// Stage commands. Each writes its artifacts and throws on failure.

// Writes the canonical .kgt of the experiment graph.
void run_kg_build(const Experiment& exp);

// Extracts one view and writes its .kgt.
void run_kg_query(const Experiment& exp, const std::string& view);

// Human-readable counts, one "<n> <kind>" line each, e.g. "16 properties".
std::string graph_stats(const kg::KnowledgeGraph& g);

// Trains (gae) or initializes (gat) the view embedding, writes the .ctxe
// file plus its cosine-similarity heatmap CSV/SVG.
void run_embed(const Experiment& exp, const std::string& view,
               const std::string& method);

// Trains every requested (mode, view) pair; baseline trains once. Trainer
// mode requires the view's embedding file and says how to create it when
// missing. Writes one checkpoint and one training log per model.
void run_train(const Experiment& exp, std::ostream& diag);

// Loads every requested checkpoint, fits Gaussian and linear heads on the
// train-set embeddings, evaluates source (and target when configured), and
// writes accuracy CSVs, delta tables vs the baseline, class-mean similarity
// heatmaps, and a target robustness table for synthetic data.
void run_eval(const Experiment& exp, std::ostream& diag);

// Fraction of misclassifications (over dataset classes the head knows) whose
// predicted class shares the true class's supercategory. A model with no
// errors counts as fraction 1. Throws when no supercategory is known for an
// involved class.
double within_supercategory_error_fraction(
    const pred::EvalResult& r,
    const std::map<std::string, std::string>& supercategory);

// Rebuilds an encoder from a checkpoint written by run_train.
enc::EncoderModel load_encoder_checkpoint(const std::string& path,
                                          const enc::EncoderConfig& cfg);

}  // namespace ctxf::pipeline
