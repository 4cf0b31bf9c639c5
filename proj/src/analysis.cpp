#include "ctxf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include "ctxf/io.hpp"

namespace ctxf::analysis {

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string format_delta(double v) {
  if (std::isnan(v)) return "-";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%+.2f", v);
  return buf;
}

// Average ranks (1-based); tied values share the mean rank of their block.
std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<size_t> idx(v.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size(), 0.0);
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Linear blue-white-red map over [-1, 1].
void heat_color(double v, int& r, int& g, int& b) {
  const double t = std::clamp((v + 1.0) / 2.0, 0.0, 1.0);
  auto lerp = [](double a, double c, double f) {
    return static_cast<int>(std::lround(a + (c - a) * f));
  };
  if (t < 0.5) {
    const double f = t / 0.5;  // blue -> white
    r = lerp(40, 255, f);
    g = lerp(60, 255, f);
    b = lerp(210, 255, f);
  } else {
    const double f = (t - 0.5) / 0.5;  // white -> red
    r = lerp(255, 205, f);
    g = lerp(255, 45, f);
    b = lerp(255, 40, f);
  }
}

}  // namespace

void SimilarityMatrix::validate() const {
  const int size = n();
  if (size == 0 || values.size() != static_cast<size_t>(size) * size)
    throw std::invalid_argument("similarity matrix: values must be n*n with n >= 1");
  for (int i = 0; i < size; ++i) {
    if (std::abs(at(i, i) - 1.0) > 1e-5)
      throw std::invalid_argument("similarity matrix: diagonal entry " +
                                  std::to_string(i) + " is " +
                                  std::to_string(at(i, i)) + ", expected 1");
    for (int j = 0; j < size; ++j) {
      const double v = at(i, j);
      if (!(v >= -1.0 && v <= 1.0))
        throw std::invalid_argument("similarity matrix: entry (" +
                                    std::to_string(i) + "," + std::to_string(j) +
                                    ") = " + std::to_string(v) +
                                    " outside [-1, 1]");
      if (std::abs(v - at(j, i)) > 1e-6)
        throw std::invalid_argument("similarity matrix: asymmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) +
                                    ")");
    }
  }
}

Tensor class_mean_embeddings(const enc::EncoderModel& m,
                             const data::ImageDataset& d) {
  d.validate();
  const std::vector<int> counts = d.class_counts();
  for (int c = 0; c < d.n_classes(); ++c)
    if (counts[c] == 0)
      throw std::invalid_argument("class_mean_embeddings: class '" +
                                  d.class_names[c] + "' has no samples");

  Tensor z = enc::embed_images(m, d.images);
  const int dim = z.dim(1);
  auto zv = z.data();
  std::vector<double> sums(static_cast<size_t>(d.n_classes()) * dim, 0.0);
  for (int i = 0; i < d.n(); ++i)
    for (int k = 0; k < dim; ++k)
      sums[static_cast<size_t>(d.labels[i]) * dim + k] +=
          zv[static_cast<size_t>(i) * dim + k];

  std::vector<float> out(sums.size());
  for (int c = 0; c < d.n_classes(); ++c) {
    double norm2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double v = sums[static_cast<size_t>(c) * dim + k] / counts[c];
      sums[static_cast<size_t>(c) * dim + k] = v;
      norm2 += v * v;
    }
    if (norm2 < 1e-24)
      throw std::runtime_error("class_mean_embeddings: class '" +
                               d.class_names[c] + "' has a zero-norm mean");
    const double inv = 1.0 / std::sqrt(norm2);
    for (int k = 0; k < dim; ++k)
      out[static_cast<size_t>(c) * dim + k] =
          static_cast<float>(sums[static_cast<size_t>(c) * dim + k] * inv);
  }
  return Tensor::from_data({d.n_classes(), dim}, std::move(out));
}

SimilarityMatrix cosine_matrix(const Tensor& rows,
                               const std::vector<std::string>& names) {
  if (rows.rank() != 2)
    throw std::invalid_argument("cosine_matrix: rows must be 2-D");
  const int n = rows.dim(0);
  const int d = rows.dim(1);
  if (n < 2) throw std::invalid_argument("cosine_matrix: need at least 2 rows");
  if (static_cast<int>(names.size()) != n)
    throw std::invalid_argument("cosine_matrix: " + std::to_string(names.size()) +
                                " names for " + std::to_string(n) + " rows");
  auto v = rows.data();
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
      const double x = v[static_cast<size_t>(i) * d + k];
      s += x * x;
    }
    if (s < 1e-24)
      throw std::invalid_argument("cosine_matrix: row " + std::to_string(i) +
                                  " ('" + names[i] + "') has zero norm");
    norms[i] = std::sqrt(s);
  }
  SimilarityMatrix m;
  m.class_names = names;
  m.values.assign(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    m.values[static_cast<size_t>(i) * n + i] = 1.0;
    for (int j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k)
        dot += static_cast<double>(v[static_cast<size_t>(i) * d + k]) *
               v[static_cast<size_t>(j) * d + k];
      const double c = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
      m.values[static_cast<size_t>(i) * n + j] = c;
      m.values[static_cast<size_t>(j) * n + i] = c;
    }
  }
  return m;
}

std::vector<double> jaccard_pairs(const kg::ViewSubgraph& view) {
  const int n_classes = view.n_classes();
  if (n_classes < 2)
    throw std::invalid_argument("jaccard_pairs: view needs at least 2 classes");
  std::vector<std::set<int>> neighbors(view.n_nodes());
  for (const kg::Triple& t : view.triples) {
    const int h = view.node_index.at(t.head);
    const int ta = view.node_index.at(t.tail);
    if (h == ta) continue;
    neighbors[h].insert(ta);
    neighbors[ta].insert(h);
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(n_classes) * (n_classes - 1) / 2);
  for (int i = 0; i < n_classes; ++i)
    for (int j = i + 1; j < n_classes; ++j) {
      std::vector<int> inter, uni;
      std::set_intersection(neighbors[i].begin(), neighbors[i].end(),
                            neighbors[j].begin(), neighbors[j].end(),
                            std::back_inserter(inter));
      std::set_union(neighbors[i].begin(), neighbors[i].end(),
                     neighbors[j].begin(), neighbors[j].end(),
                     std::back_inserter(uni));
      out.push_back(uni.empty() ? 0.0
                                : static_cast<double>(inter.size()) / uni.size());
    }
  return out;
}

double rank_correlation(const std::vector<double>& graph_sim,
                        const SimilarityMatrix& emb_sim) {
  const int n = emb_sim.n();
  const size_t expected = static_cast<size_t>(n) * (n - 1) / 2;
  if (graph_sim.size() != expected)
    throw std::invalid_argument("rank_correlation: " +
                                std::to_string(graph_sim.size()) +
                                " graph pairs for " + std::to_string(expected) +
                                " matrix pairs");
  if (expected < 2)
    throw std::invalid_argument("rank_correlation: need at least 2 pairs");
  std::vector<double> emb;
  emb.reserve(expected);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) emb.push_back(emb_sim.at(i, j));

  auto constant = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(),
                              std::not_equal_to<double>()) == v.end();
  };
  if (constant(graph_sim) || constant(emb))
    throw std::invalid_argument(
        "rank_correlation: undefined for a constant similarity vector");

  const std::vector<double> ra = average_ranks(graph_sim);
  const std::vector<double> rb = average_ranks(emb);
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(ra.size());
  mb /= static_cast<double>(rb.size());
  double num = 0.0, da = 0.0, db = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

void emit_heatmap(const SimilarityMatrix& m, const std::string& stem) {
  m.validate();
  const int n = m.n();

  std::string csv = "class";
  for (const auto& name : m.class_names) csv += "," + name;
  csv += "\n";
  for (int i = 0; i < n; ++i) {
    csv += m.class_names[i];
    for (int j = 0; j < n; ++j) csv += "," + format_value(m.at(i, j));
    csv += "\n";
  }
  io::write_file(stem + ".csv", csv);

  const int cell = 24;
  const int margin = 120;
  const int size = margin + n * cell + 10;
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
      std::to_string(size) + "\" height=\"" + std::to_string(size) + "\">\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int r, g, b;
      heat_color(m.at(i, j), r, g, b);
      char buf[192];
      std::snprintf(buf, sizeof(buf),
                    "  <rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                    "fill=\"rgb(%d,%d,%d)\"><title>%s/%s: %.4f</title></rect>\n",
                    margin + j * cell, margin + i * cell, cell, cell, r, g, b,
                    m.class_names[i].c_str(), m.class_names[j].c_str(),
                    m.at(i, j));
      svg += buf;
    }
  }
  for (int i = 0; i < n; ++i) {
    const int center = margin + i * cell + cell / 2 + 4;
    svg += "  <text x=\"" + std::to_string(margin - 6) + "\" y=\"" +
           std::to_string(center) + "\" font-size=\"11\" text-anchor=\"end\">" +
           m.class_names[i] + "</text>\n";
    const int x = margin + i * cell + cell / 2;
    svg += "  <text x=\"" + std::to_string(x) + "\" y=\"" +
           std::to_string(margin - 6) + "\" font-size=\"11\" text-anchor=\"start\" " +
           "transform=\"rotate(-60 " + std::to_string(x) + " " +
           std::to_string(margin - 6) + ")\">" + m.class_names[i] + "</text>\n";
  }
  svg += "</svg>\n";
  io::write_file(stem + ".svg", svg);
}

DeltaTable delta_table(const pred::AccuracyRow& baseline,
                       const std::vector<pred::AccuracyRow>& models,
                       const std::vector<std::string>& class_names) {
  const size_t n = class_names.size();
  if (baseline.per_class.size() != n)
    throw std::invalid_argument("delta_table: baseline '" + baseline.model +
                                "' has " +
                                std::to_string(baseline.per_class.size()) +
                                " classes, expected " + std::to_string(n));
  if (models.empty())
    throw std::invalid_argument("delta_table: need at least one model row");
  DeltaTable t;
  t.baseline = baseline.model;
  t.class_names = class_names;
  for (const auto& row : models) {
    if (row.per_class.size() != n)
      throw std::invalid_argument("delta_table: model '" + row.model +
                                  "' has " + std::to_string(row.per_class.size()) +
                                  " classes, expected " + std::to_string(n));
    t.models.push_back(row.model);
    std::vector<double> delta(n);
    for (size_t c = 0; c < n; ++c)
      delta[c] = row.per_class[c] - baseline.per_class[c];
    t.delta.push_back(std::move(delta));
    t.delta_all.push_back(row.all - baseline.all);
  }

  const size_t m = models.size();
  t.best.assign(m, std::vector<bool>(n, false));
  t.best_all.assign(m, false);
  for (size_t c = 0; c < n; ++c) {
    double hi = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < m; ++i)
      if (!std::isnan(t.delta[i][c])) hi = std::max(hi, t.delta[i][c]);
    for (size_t i = 0; i < m; ++i)
      t.best[i][c] = !std::isnan(t.delta[i][c]) && t.delta[i][c] == hi;
  }
  {
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : t.delta_all)
      if (!std::isnan(v)) hi = std::max(hi, v);
    for (size_t i = 0; i < m; ++i)
      t.best_all[i] = !std::isnan(t.delta_all[i]) && t.delta_all[i] == hi;
  }
  return t;
}

void write_delta_csv(const std::string& path, const DeltaTable& t) {
  std::string text = "delta_vs_" + t.baseline;
  for (const auto& name : t.class_names) text += "," + name;
  text += ",All\n";
  for (size_t i = 0; i < t.models.size(); ++i) {
    text += t.models[i];
    for (size_t c = 0; c < t.class_names.size(); ++c) {
      text += "," + format_delta(t.delta[i][c]);
      if (t.best[i][c]) text += "*";
    }
    text += "," + format_delta(t.delta_all[i]);
    if (t.best_all[i]) text += "*";
    text += "\n";
  }
  io::write_file(path, text);
}

}  // namespace ctxf::analysis
