#include "ctxf/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ctxf::enc {

namespace {

constexpr float kLumaR = 0.299f, kLumaG = 0.587f, kLumaB = 0.114f;

img::Image crop(const img::Image& in, int top, int left, int h, int w) {
  img::Image out = img::Image::zeros(in.channels, h, w);
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = in.at(c, top + y, left + x);
  return out;
}

img::Image hflip(const img::Image& in) {
  img::Image out = img::Image::zeros(in.channels, in.height, in.width);
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) out.at(c, y, x) = in.at(c, y, in.width - 1 - x);
  return out;
}

}  // namespace

EncoderModel EncoderModel::init(const EncoderConfig& cfg, Rng& rng) {
  if (cfg.height < 1 || cfg.width < 1 || cfg.channels < 1) {
    throw std::invalid_argument("EncoderModel::init: input size must be positive");
  }
  if (cfg.widths.empty()) {
    throw std::invalid_argument("EncoderModel::init: at least one stage width required");
  }
  if (cfg.stem_stride < 1) {
    throw std::invalid_argument("EncoderModel::init: stem stride must be >= 1");
  }
  EncoderModel m;
  m.cfg = cfg;
  int in_c = cfg.channels;
  for (int out_c : cfg.widths) {
    if (out_c < 1) throw std::invalid_argument("EncoderModel::init: widths must be positive");
    // He initialization for relu stacks.
    const float stddev = std::sqrt(2.0f / static_cast<float>(in_c * 9));
    m.conv_w.push_back(Tensor::randn({out_c, in_c, 3, 3}, rng, stddev, true));
    m.conv_b.push_back(Tensor::zeros({out_c}, true));
    in_c = out_c;
  }
  m.head_w1 = Tensor::randn({cfg.d_e(), cfg.head_hidden}, rng,
                            std::sqrt(2.0f / static_cast<float>(cfg.d_e())), true);
  m.head_b1 = Tensor::zeros({cfg.head_hidden}, true);
  m.head_w2 = Tensor::randn({cfg.head_hidden, kProjectionDim}, rng,
                            std::sqrt(1.0f / static_cast<float>(cfg.head_hidden)), true);
  m.head_b2 = Tensor::zeros({kProjectionDim}, true);
  return m;
}

ParamList EncoderModel::params(const std::string& prefix) const {
  ParamList out;
  for (size_t i = 0; i < conv_w.size(); ++i) {
    out.push_back({prefix + ".conv" + std::to_string(i) + ".w", conv_w[i]});
    out.push_back({prefix + ".conv" + std::to_string(i) + ".b", conv_b[i]});
  }
  out.push_back({prefix + ".head.w1", head_w1});
  out.push_back({prefix + ".head.b1", head_b1});
  out.push_back({prefix + ".head.w2", head_w2});
  out.push_back({prefix + ".head.b2", head_b2});
  return out;
}

std::int64_t EncoderModel::n_params() const {
  std::int64_t n = 0;
  for (const Param& p : params("m")) n += p.tensor.numel();
  return n;
}

Tensor encode(const EncoderModel& m, const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != m.cfg.channels || x.dim(2) != m.cfg.height ||
      x.dim(3) != m.cfg.width) {
    throw std::invalid_argument(
        "encode: expected batch of " + std::to_string(m.cfg.channels) + "x" +
        std::to_string(m.cfg.height) + "x" + std::to_string(m.cfg.width) + " images");
  }
  Tensor cur = x;
  for (size_t i = 0; i < m.conv_w.size(); ++i) {
    const int stride = (i == 0) ? m.cfg.stem_stride : 1;
    cur = relu(conv2d(cur, m.conv_w[i], m.conv_b[i], stride, 1));
    if (cur.dim(2) >= 2 && cur.dim(3) >= 2) cur = max_pool2d(cur, 2, 2);
  }
  return global_mean_pool(cur);
}

Tensor project(const EncoderModel& m, const Tensor& h) {
  if (h.rank() != 2 || h.dim(1) != m.cfg.d_e()) {
    throw std::invalid_argument("project: expected (*, " + std::to_string(m.cfg.d_e()) +
                                ") representations");
  }
  Tensor hidden = relu(add(matmul(h, m.head_w1), m.head_b1));
  return l2_normalize_rows(add(matmul(hidden, m.head_w2), m.head_b2));
}

Tensor embed_images(const EncoderModel& m, const std::vector<img::Image>& images,
                    int batch_size) {
  if (images.empty()) throw std::invalid_argument("embed_images: empty image list");
  if (batch_size < 1) throw std::invalid_argument("embed_images: batch size must be >= 1");
  std::vector<float> out;
  out.reserve(images.size() * kProjectionDim);
  for (size_t start = 0; start < images.size(); start += batch_size) {
    const size_t stop = std::min(images.size(), start + batch_size);
    std::vector<img::Image> chunk;
    for (size_t i = start; i < stop; ++i) {
      chunk.push_back(img::bilinear_resize(images[i], m.cfg.height, m.cfg.width));
    }
    Tensor z = project(m, encode(m, img::to_tensor(chunk)));
    out.insert(out.end(), z.data().begin(), z.data().end());
  }
  return Tensor::from_data({static_cast<int>(images.size()), kProjectionDim}, std::move(out));
}

// ---- augmentation ---------------------------------------------------------------

void AugmentConfig::validate() const {
  if (!(crop_scale_lo > 0.0f) || crop_scale_lo > crop_scale_hi || crop_scale_hi > 1.0f) {
    throw std::invalid_argument("AugmentConfig: crop scale range must satisfy 0 < lo <= hi <= 1");
  }
  if (flip_prob < 0.0f || flip_prob > 1.0f || grayscale_prob < 0.0f || grayscale_prob > 1.0f) {
    throw std::invalid_argument("AugmentConfig: probabilities must lie in [0,1]");
  }
  if (jitter_strength < 0.0f || jitter_strength >= 1.0f) {
    throw std::invalid_argument("AugmentConfig: jitter strength must lie in [0,1)");
  }
  if (out_height < 1 || out_width < 1) {
    throw std::invalid_argument("AugmentConfig: output size must be positive");
  }
}

img::Image augment_once(const img::Image& in, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  if (in.pix.empty()) throw std::invalid_argument("augment_once: empty image");

  // Crop a uniformly placed square-fraction region, then resize. A [1,1]
  // scale range selects the whole image.
  const float scale = rng.uniform(cfg.crop_scale_lo, cfg.crop_scale_hi);
  int ch = static_cast<int>(std::lround(scale * in.height));
  int cw = static_cast<int>(std::lround(scale * in.width));
  ch = std::min(std::max(ch, 1), in.height);
  cw = std::min(std::max(cw, 1), in.width);
  const int top = rng.randint(in.height - ch + 1);
  const int left = rng.randint(in.width - cw + 1);
  img::Image view = (ch == in.height && cw == in.width) ? in : crop(in, top, left, ch, cw);
  view = img::bilinear_resize(view, cfg.out_height, cfg.out_width);

  if (rng.uniform() < cfg.flip_prob) view = hflip(view);

  // Multiplicative jitter; factors of exactly 1 leave pixels untouched so a
  // zero-strength config is a bitwise no-op.
  const float fb = rng.uniform(1.0f - cfg.jitter_strength, 1.0f + cfg.jitter_strength);
  const float fc = rng.uniform(1.0f - cfg.jitter_strength, 1.0f + cfg.jitter_strength);
  const float fs = rng.uniform(1.0f - cfg.jitter_strength, 1.0f + cfg.jitter_strength);
  if (fb != 1.0f) {
    for (float& p : view.pix) p *= fb;
  }
  if (fc != 1.0f) {
    double mean = 0.0;
    for (float p : view.pix) mean += p;
    mean /= static_cast<double>(view.pix.size());
    const float mu = static_cast<float>(mean);
    for (float& p : view.pix) p = mu + (p - mu) * fc;
  }
  if (fs != 1.0f && view.channels == 3) {
    for (int y = 0; y < view.height; ++y) {
      for (int x = 0; x < view.width; ++x) {
        const float luma = kLumaR * view.at(0, y, x) + kLumaG * view.at(1, y, x) +
                           kLumaB * view.at(2, y, x);
        for (int c = 0; c < 3; ++c) view.at(c, y, x) = luma + (view.at(c, y, x) - luma) * fs;
      }
    }
  }

  if (rng.uniform() < cfg.grayscale_prob && view.channels == 3) {
    for (int y = 0; y < view.height; ++y) {
      for (int x = 0; x < view.width; ++x) {
        const float luma = kLumaR * view.at(0, y, x) + kLumaG * view.at(1, y, x) +
                           kLumaB * view.at(2, y, x);
        for (int c = 0; c < 3; ++c) view.at(c, y, x) = luma;
      }
    }
  }

  for (float& p : view.pix) p = std::min(1.0f, std::max(0.0f, p));
  return view;
}

std::pair<img::Image, img::Image> augment_pair(const img::Image& in, const AugmentConfig& cfg,
                                               Rng& rng) {
  img::Image a = augment_once(in, cfg, rng);
  img::Image b = augment_once(in, cfg, rng);
  return {std::move(a), std::move(b)};
}

}  // namespace ctxf::enc
