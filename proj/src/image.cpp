#include "ctxf/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ctxf::img {

Image Image::zeros(int c, int h, int w) {
  if (c < 1 || h < 1 || w < 1) {
    throw std::invalid_argument("Image::zeros: dimensions must be positive");
  }
  Image out;
  out.channels = c;
  out.height = h;
  out.width = w;
  out.pix.assign(static_cast<size_t>(c) * h * w, 0.0f);
  return out;
}

Image bilinear_resize(const Image& in, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw std::invalid_argument("bilinear_resize: output size must be positive");
  }
  if (in.pix.size() != static_cast<size_t>(in.channels) * in.height * in.width) {
    throw std::invalid_argument("bilinear_resize: pixel buffer does not match dimensions");
  }
  if (out_h == in.height && out_w == in.width) return in;

  Image out = Image::zeros(in.channels, out_h, out_w);
  const double sy = static_cast<double>(in.height) / out_h;
  const double sx = static_cast<double>(in.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    // Half-pixel-center mapping: output center lands at src_y in input space.
    double src_y = (y + 0.5) * sy - 0.5;
    if (src_y < 0) src_y = 0;
    if (src_y > in.height - 1) src_y = in.height - 1;
    const int y0 = static_cast<int>(src_y);
    const int y1 = (y0 + 1 < in.height) ? y0 + 1 : y0;
    const double fy = src_y - y0;
    for (int x = 0; x < out_w; ++x) {
      double src_x = (x + 0.5) * sx - 0.5;
      if (src_x < 0) src_x = 0;
      if (src_x > in.width - 1) src_x = in.width - 1;
      const int x0 = static_cast<int>(src_x);
      const int x1 = (x0 + 1 < in.width) ? x0 + 1 : x0;
      const double fx = src_x - x0;
      for (int c = 0; c < in.channels; ++c) {
        const double top = in.at(c, y0, x0) * (1.0 - fx) + in.at(c, y0, x1) * fx;
        const double bot = in.at(c, y1, x0) * (1.0 - fx) + in.at(c, y1, x1) * fx;
        out.at(c, y, x) = static_cast<float>(top * (1.0 - fy) + bot * fy);
      }
    }
  }
  return out;
}

Tensor to_tensor(const std::vector<Image>& batch) {
  if (batch.empty()) throw std::invalid_argument("to_tensor: empty image batch");
  const Image& first = batch.front();
  std::vector<float> data;
  data.reserve(batch.size() * first.pix.size());
  for (const Image& im : batch) {
    if (im.channels != first.channels || im.height != first.height ||
        im.width != first.width) {
      throw std::invalid_argument("to_tensor: images in a batch must share one shape");
    }
    data.insert(data.end(), im.pix.begin(), im.pix.end());
  }
  return Tensor::from_data(
      {static_cast<int>(batch.size()), first.channels, first.height, first.width},
      std::move(data));
}

}  // namespace ctxf::img
