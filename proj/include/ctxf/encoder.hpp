#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctxf/image.hpp"
#include "ctxf/optim.hpp"
#include "ctxf/rng.hpp"
#include "ctxf/tensor.hpp"

namespace ctxf::enc {

inline constexpr int kProjectionDim = 128;

// Desk-scale convolutional encoder: one 3x3 conv + relu + 2x2 max-pool per
// stage, global average pooling into a d_E = widths.back() representation,
// then a two-layer MLP head onto the 128-d unit sphere. The default sizes
// total well under 500k parameters so end-to-end training fits a laptop-class
// time budget.
struct EncoderConfig {
  int height = 32;
  int width = 32;
  int channels = 3;
  std::vector<int> widths = {8, 16, 32, 64};
  int stem_stride = 2;  // stride of the first convolution only
  int head_hidden = 128;

  int d_e() const { return widths.back(); }
};

struct EncoderModel {
  EncoderConfig cfg;
  std::vector<Tensor> conv_w;  // per stage: (out_c, in_c, 3, 3)
  std::vector<Tensor> conv_b;  // per stage: (out_c)
  Tensor head_w1, head_b1;     // d_E -> head_hidden
  Tensor head_w2, head_b2;     // head_hidden -> 128

  static EncoderModel init(const EncoderConfig& cfg, Rng& rng);
  ParamList params(const std::string& prefix) const;
  std::int64_t n_params() const;
};

// (N, C, H, W) images with values in [0,1] -> (N, d_E) representations.
// Pure function of (parameters, input).
Tensor encode(const EncoderModel& m, const Tensor& x);

// (N, d_E) -> (N, 128) rows on the unit sphere. Errors if a row collapses to
// norm < 1e-8 before normalization.
Tensor project(const EncoderModel& m, const Tensor& h);

// Evaluation-time embedding: plain bilinear resize to the configured input
// size (no augmentation), then encode + project in batches. The result is
// detached from the autodiff graph.
Tensor embed_images(const EncoderModel& m, const std::vector<img::Image>& images,
                    int batch_size = 64);

// ---- augmentation ---------------------------------------------------------------

// Random crop + resize, horizontal flip, multiplicative color jitter
// (brightness/contrast/saturation), random grayscale. Factors of exactly 1
// are skipped, so a zeroed config reproduces the input bit for bit.
struct AugmentConfig {
  float crop_scale_lo = 0.6f;  // crop side length as a fraction of the input
  float crop_scale_hi = 1.0f;
  float flip_prob = 0.5f;
  float jitter_strength = 0.4f;  // factors drawn from [1-s, 1+s]
  float grayscale_prob = 0.2f;
  int out_height = 32;
  int out_width = 32;

  void validate() const;
};

// One augmented view; consumes a caller-provided stream so per-sample
// determinism is the caller's choice of stream derivation.
img::Image augment_once(const img::Image& in, const AugmentConfig& cfg, Rng& rng);

// The two views of one source sample, drawn sequentially from one stream.
std::pair<img::Image, img::Image> augment_pair(const img::Image& in, const AugmentConfig& cfg,
                                               Rng& rng);

}  // namespace ctxf::enc
