#pragma once

#include <vector>

#include "ctxf/tensor.hpp"

namespace ctxf::img {

// A single image in channel-major (CHW) layout with float pixels in [0,1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pix;

  static Image zeros(int c, int h, int w);

  float at(int c, int y, int x) const {
    return pix[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float& at(int c, int y, int x) {
    return pix[(static_cast<size_t>(c) * height + y) * width + x];
  }
};

// Standard bilinear interpolation with half-pixel centers; resizing to the
// source size reproduces the input exactly.
Image bilinear_resize(const Image& in, int out_h, int out_w);

// Stacks equally-shaped images into an (N, C, H, W) tensor.
Tensor to_tensor(const std::vector<Image>& batch);

}  // namespace ctxf::img
