#pragma once

#include <string>
#include <vector>

#include "ctxf/datasets.hpp"
#include "ctxf/encoder.hpp"
#include "ctxf/kg.hpp"
#include "ctxf/predict.hpp"
#include "ctxf/tensor.hpp"

// Embedding diagnostics and reporting: cosine-similarity matrices, heatmap
// emission (CSV + SVG), per-class accuracy deltas against a baseline, and
// rank correlation between graph-side and embedding-side class similarity.
namespace ctxf::analysis {

// Dense class-by-class cosine similarity matrix.
struct SimilarityMatrix {
  std::vector<std::string> class_names;
  std::vector<double> values;  // n*n row-major

  int n() const { return static_cast<int>(class_names.size()); }
  double at(int i, int j) const { return values[static_cast<size_t>(i) * n() + j]; }

  // Enforces symmetry within 1e-6, unit diagonal within 1e-5, and the
  // [-1, 1] range. Throws std::invalid_argument on violation.
  void validate() const;
};

// Per-class mean of the projected embeddings, L2-normalized per row.
// Returns (n_classes, projection_dim); throws when a class has no samples.
Tensor class_mean_embeddings(const enc::EncoderModel& m,
                             const data::ImageDataset& d);

// M[i][j] = cos(row_i, row_j), computed in double precision and clamped to
// [-1, 1]. Requires >= 2 rows; throws on a near-zero-norm row.
SimilarityMatrix cosine_matrix(const Tensor& rows,
                               const std::vector<std::string>& names);

// Jaccard similarity of neighbor sets in the view graph for every class
// pair (i < j), in row-major upper-triangle order. Neighbor sets are over
// all view nodes (classes and attribute values); a pair with two empty
// neighbor sets scores 0.
std::vector<double> jaccard_pairs(const kg::ViewSubgraph& view);

// Spearman rank correlation (average ranks for ties) between a graph-side
// per-pair similarity vector and the matching upper triangle of an
// embedding similarity matrix. Throws when either side is constant, since
// the correlation is undefined.
double rank_correlation(const std::vector<double>& graph_sim,
                        const SimilarityMatrix& emb_sim);

// Writes `stem`.csv (class-name header row and column, 12 significant
// digits) and `stem`.svg (one cell per entry colored on a linear
// blue-white-red map over the fixed [-1, 1] range, class-name axis labels).
void emit_heatmap(const SimilarityMatrix& m, const std::string& stem);

// Per-class accuracy deltas of each model against a shared baseline, in
// percentage points. NaN entries mark classes a model was not evaluated on.
struct DeltaTable {
  std::string baseline;
  std::vector<std::string> class_names;
  std::vector<std::string> models;
  std::vector<std::vector<double>> delta;  // (models, classes)
  std::vector<double> delta_all;           // per model
  std::vector<std::vector<bool>> best;     // best delta per class column
  std::vector<bool> best_all;              // best overall delta
};

// Deltas are computed exactly as model minus baseline on the given rows.
// Every row must carry one entry per name in `class_names`.
DeltaTable delta_table(const pred::AccuracyRow& baseline,
                       const std::vector<pred::AccuracyRow>& models,
                       const std::vector<std::string>& class_names);

// CSV layout: "delta_vs_<baseline>,<class...>,All"; signed deltas with two
// decimals, NaN as "-", best value per column marked with a trailing '*'.
void write_delta_csv(const std::string& path, const DeltaTable& t);

}  // namespace ctxf::analysis
