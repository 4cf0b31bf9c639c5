#include "ctxf/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctxf/io.hpp"
#include "ctxf/rng.hpp"

namespace ctxf::data {

namespace {

constexpr int kSize = 32;

struct Rgb {
  float r, g, b;
};

const std::map<std::string, Rgb>& color_table() {
  static const std::map<std::string, Rgb> table = {
      {"red", {0.85f, 0.20f, 0.20f}},    {"yellow", {0.90f, 0.85f, 0.20f}},
      {"purple", {0.60f, 0.25f, 0.70f}}, {"green", {0.25f, 0.70f, 0.30f}},
      {"white", {0.95f, 0.95f, 0.95f}},  {"orange", {0.90f, 0.55f, 0.15f}},
      {"blue", {0.20f, 0.35f, 0.85f}},   {"gray", {0.55f, 0.55f, 0.55f}},
      {"black", {0.05f, 0.05f, 0.05f}},  {"brown", {0.55f, 0.35f, 0.20f}},
  };
  return table;
}

bool inside_shape(const std::string& shape, float u, float v, float r) {
  if (shape == "circle") return u * u + v * v <= r * r;
  if (shape == "square") {
    const float h = 0.82f * r;
    return std::fabs(u) <= h && std::fabs(v) <= h;
  }
  if (shape == "triangle") {
    // Equilateral triangle, apex pointing up (negative v), inscribed radius r.
    const float x0 = 0.0f, y0 = -r;
    const float x1 = 0.866f * r, y1 = 0.5f * r;
    const float x2 = -0.866f * r, y2 = 0.5f * r;
    auto side = [&](float ax, float ay, float bx, float by) {
      return (bx - ax) * (v - ay) - (by - ay) * (u - ax);
    };
    const float s0 = side(x0, y0, x1, y1);
    const float s1 = side(x1, y1, x2, y2);
    const float s2 = side(x2, y2, x0, y0);
    return (s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0);
  }
  if (shape == "cross") {
    const float arm = 0.33f * r;
    return (std::fabs(u) <= arm && std::fabs(v) <= r) ||
           (std::fabs(v) <= arm && std::fabs(u) <= r);
  }
  throw std::invalid_argument("generate: unknown shape '" + shape + "'");
}

// Texture darkens part of the foreground in the shape's local frame.
float texture_factor(const std::string& texture, float u, float v) {
  if (texture == "uniform") return 1.0f;
  if (texture == "striped") {
    const long band = std::lround(std::floor(v / 2.5f));
    return (band % 2 == 0) ? 1.0f : 0.45f;
  }
  if (texture == "dotted") {
    const long cu = std::lround(std::floor(u / 2.5f));
    const long cv = std::lround(std::floor(v / 2.5f));
    return ((cu + cv) % 2 == 0) ? 0.45f : 1.0f;
  }
  throw std::invalid_argument("generate: unknown texture '" + texture + "'");
}

float background_level(const std::string& background) {
  if (background == "dark") return kDarkBackground;
  if (background == "light") return kLightBackground;
  throw std::invalid_argument("generate: unknown background '" + background + "'");
}

float snap_u8(float v) {
  v = std::min(1.0f, std::max(0.0f, v));
  return static_cast<float>(std::lround(v * 255.0f)) / 255.0f;
}

img::Image render(const synthetic::ClassSpec& cs, Rng& rng) {
  const Rgb color = [&] {
    auto it = color_table().find(cs.color);
    if (it == color_table().end()) {
      throw std::invalid_argument("generate: unknown color '" + cs.color + "' for class '" +
                                  cs.name + "'");
    }
    return it->second;
  }();
  const float bg = background_level(cs.background);

  const float cx = kSize / 2.0f + rng.uniform(-3.0f, 3.0f);
  const float cy = kSize / 2.0f + rng.uniform(-3.0f, 3.0f);
  const float radius = 10.0f * rng.uniform(0.8f, 1.15f);
  const float theta = rng.uniform(0.0f, 6.2831853f);
  const float ct = std::cos(theta), st = std::sin(theta);

  img::Image im = img::Image::zeros(3, kSize, kSize);
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < kSize; ++x) {
      // 3x3 subpixel coverage for soft edges.
      int hits = 0;
      for (int sy = -1; sy <= 1; ++sy) {
        for (int sx = -1; sx <= 1; ++sx) {
          const float dx = x + 0.5f + sx / 3.0f - cx;
          const float dy = y + 0.5f + sy / 3.0f - cy;
          const float u = ct * dx + st * dy;
          const float v = -st * dx + ct * dy;
          if (inside_shape(cs.shape, u, v, radius)) ++hits;
        }
      }
      const float cov = hits / 9.0f;
      float pr = bg, pg = bg, pb = bg;
      if (cov > 0.0f) {
        const float dx = x + 0.5f - cx;
        const float dy = y + 0.5f - cy;
        const float tf =
            texture_factor(cs.texture, ct * dx + st * dy, -st * dx + ct * dy);
        pr = bg * (1.0f - cov) + color.r * tf * cov;
        pg = bg * (1.0f - cov) + color.g * tf * cov;
        pb = bg * (1.0f - cov) + color.b * tf * cov;
      }
      im.at(0, y, x) = snap_u8(pr);
      im.at(1, y, x) = snap_u8(pg);
      im.at(2, y, x) = snap_u8(pb);
    }
  }
  return im;
}

void validate_spec(const synthetic::Spec& spec) {
  if (spec.classes.empty()) throw std::invalid_argument("generate: spec has no classes");
  std::set<std::string> names, supers;
  for (const synthetic::ClassSpec& c : spec.classes) {
    if (!names.insert(c.name).second) {
      throw std::invalid_argument("generate: duplicate class name '" + c.name + "'");
    }
    supers.insert(c.supercategory);
  }
  if (supers.size() < 2) {
    throw std::invalid_argument("generate: spec needs at least 2 supercategories, has " +
                                std::to_string(supers.size()));
  }
}

}  // namespace

std::vector<int> ImageDataset::class_counts() const {
  std::vector<int> counts(class_names.size(), 0);
  for (int l : labels) {
    if (l < 0 || l >= n_classes()) {
      throw std::runtime_error("ImageDataset: label " + std::to_string(l) +
                               " outside 0.." + std::to_string(n_classes() - 1));
    }
    ++counts[l];
  }
  return counts;
}

void ImageDataset::validate() const {
  if (images.size() != labels.size()) {
    throw std::runtime_error("ImageDataset: " + std::to_string(images.size()) + " images vs " +
                             std::to_string(labels.size()) + " labels");
  }
  class_counts();  // label range check
  for (const img::Image& im : images) {
    if (im.channels != 3 || im.height != kSize || im.width != kSize) {
      throw std::runtime_error("ImageDataset: images must be 3x32x32");
    }
    for (float p : im.pix) {
      if (!(p >= 0.0f && p <= 1.0f)) {
        throw std::runtime_error("ImageDataset: pixel value outside [0,1]");
      }
    }
  }
}

ImageDataset generate(const synthetic::Spec& spec, int n_per_class, std::uint64_t seed) {
  validate_spec(spec);
  if (n_per_class < 1) throw std::invalid_argument("generate: n_per_class must be >= 1");

  ImageDataset d;
  for (const synthetic::ClassSpec& c : spec.classes) d.class_names.push_back(c.name);
  Rng root(seed);
  for (size_t c = 0; c < spec.classes.size(); ++c) {
    for (int i = 0; i < n_per_class; ++i) {
      Rng stream = root.fork(c, static_cast<std::uint64_t>(i));
      d.images.push_back(render(spec.classes[c], stream));
      d.labels.push_back(static_cast<int>(c));
    }
  }
  return d;
}

ImageDataset shift(const ImageDataset& d, const DomainShift& s, std::uint64_t seed) {
  if (s.brightness < -1.0f || s.brightness > 1.0f) {
    throw std::invalid_argument("shift: brightness must lie in [-1, 1]");
  }
  if (!(s.size_scale > 0.0f) || s.size_scale > 4.0f) {
    throw std::invalid_argument("shift: size scale must lie in (0, 4]");
  }
  if (s.noise_std < 0.0f || s.noise_std > 1.0f) {
    throw std::invalid_argument("shift: noise std must lie in [0, 1]");
  }
  d.validate();

  ImageDataset out;
  out.labels = d.labels;
  out.class_names = d.class_names;
  Rng root(seed);
  for (size_t i = 0; i < d.images.size(); ++i) {
    img::Image im = d.images[i];

    if (s.background_swap) {
      // Flat-background pixels have all three channels at a known level.
      for (int y = 0; y < im.height; ++y) {
        for (int x = 0; x < im.width; ++x) {
          const float a = im.at(0, y, x), b = im.at(1, y, x), c = im.at(2, y, x);
          // The u8 snap of generate() moves levels by up to 1/510, so the
          // match window is wider than that but far below level separation.
          float swapped = -1.0f;
          if (a == b && b == c) {
            if (std::fabs(a - kDarkBackground) < 2e-3f) swapped = kLightBackground;
            if (std::fabs(a - kLightBackground) < 2e-3f) swapped = kDarkBackground;
          }
          if (swapped >= 0.0f) {
            im.at(0, y, x) = swapped;
            im.at(1, y, x) = swapped;
            im.at(2, y, x) = swapped;
          }
        }
      }
    }

    if (s.size_scale != 1.0f) {
      // Zoom about the center and re-frame to the original size, padding with
      // the image's own corner value (flat background).
      const int zh = std::max(1, static_cast<int>(std::lround(im.height * s.size_scale)));
      const int zw = std::max(1, static_cast<int>(std::lround(im.width * s.size_scale)));
      img::Image zoomed = img::bilinear_resize(im, zh, zw);
      img::Image framed = img::Image::zeros(im.channels, im.height, im.width);
      for (int c = 0; c < im.channels; ++c) {
        const float pad = zoomed.at(c, 0, 0);
        for (int y = 0; y < im.height; ++y) {
          for (int x = 0; x < im.width; ++x) {
            const int sy = y + (zh - im.height) / 2;
            const int sx = x + (zw - im.width) / 2;
            framed.at(c, y, x) = (sy >= 0 && sy < zh && sx >= 0 && sx < zw)
                                     ? zoomed.at(c, sy, sx)
                                     : pad;
          }
        }
      }
      im = std::move(framed);
    }

    if (s.brightness != 0.0f) {
      for (float& p : im.pix) p += s.brightness;
    }

    if (s.noise_std > 0.0f) {
      Rng stream = root.fork(i);
      for (float& p : im.pix) p += s.noise_std * stream.normal();
    }

    if (s.brightness != 0.0f || s.noise_std > 0.0f || s.size_scale != 1.0f) {
      for (float& p : im.pix) p = std::min(1.0f, std::max(0.0f, p));
    }
    out.images.push_back(std::move(im));
  }
  return out;
}

synthetic::Spec make_target_spec(const synthetic::Spec& source, const std::string& drop,
                                 const synthetic::ClassSpec& add) {
  synthetic::Spec out;
  bool dropped = false;
  for (const synthetic::ClassSpec& c : source.classes) {
    if (c.name == drop) {
      dropped = true;
      continue;
    }
    if (c.name == add.name) {
      throw std::invalid_argument("make_target_spec: class '" + add.name +
                                  "' already exists in the source spec");
    }
    out.classes.push_back(c);
  }
  if (!dropped) {
    throw std::invalid_argument("make_target_spec: source spec has no class '" + drop + "'");
  }
  out.classes.push_back(add);
  return out;
}

// ---- containers -----------------------------------------------------------------

void save_dataset(const std::string& path, const ImageDataset& d) {
  d.validate();
  if (d.n_classes() > 255) {
    throw std::invalid_argument("save_dataset: label bytes cap classes at 255");
  }
  std::ofstream f = io::open_out(path);
  io::write_bytes(f, "CTXD", 4);
  io::write_u32(f, kDatasetVersion);
  io::write_u32(f, static_cast<std::uint32_t>(d.n()));
  io::write_u32(f, kSize);
  io::write_u32(f, kSize);
  io::write_u32(f, 3);
  io::write_u32(f, static_cast<std::uint32_t>(d.n_classes()));
  for (const std::string& name : d.class_names) io::write_string(f, name);
  std::vector<std::uint8_t> bytes;
  bytes.reserve(static_cast<size_t>(d.n()) * 3 * kSize * kSize);
  for (const img::Image& im : d.images) {
    for (float p : im.pix) {
      bytes.push_back(static_cast<std::uint8_t>(std::lround(p * 255.0f)));
    }
  }
  io::write_bytes(f, bytes.data(), bytes.size());
  for (int l : d.labels) {
    const std::uint8_t b = static_cast<std::uint8_t>(l);
    io::write_bytes(f, &b, 1);
  }
  if (!f) throw std::runtime_error("save_dataset: write failed for " + path);
}

ImageDataset load_dataset(const std::string& path) {
  std::ifstream f = io::open_in(path);
  io::expect_magic(f, "CTXD", path);
  const std::uint32_t version = io::read_u32(f, "dataset version");
  if (version != kDatasetVersion) {
    throw std::runtime_error("load_dataset: unsupported version " + std::to_string(version) +
                             " in " + path);
  }
  const std::uint32_t n = io::read_u32(f, "image count");
  const std::uint32_t h = io::read_u32(f, "height");
  const std::uint32_t w = io::read_u32(f, "width");
  const std::uint32_t c = io::read_u32(f, "channels");
  if (h != kSize || w != kSize || c != 3) {
    throw std::runtime_error("load_dataset: expected 3x32x32 payload, got " +
                             std::to_string(c) + "x" + std::to_string(h) + "x" +
                             std::to_string(w) + " in " + path);
  }
  const std::uint32_t n_classes = io::read_u32(f, "class count");
  if (n > 10000000 || n_classes > 255) {
    throw std::runtime_error("load_dataset: implausible header in " + path);
  }
  ImageDataset d;
  for (std::uint32_t i = 0; i < n_classes; ++i) {
    d.class_names.push_back(io::read_string(f, "class name"));
  }
  const size_t plane = static_cast<size_t>(3) * kSize * kSize;
  std::vector<std::uint8_t> bytes(plane);
  for (std::uint32_t i = 0; i < n; ++i) {
    io::read_bytes(f, bytes.data(), plane, "pixel payload");
    img::Image im = img::Image::zeros(3, kSize, kSize);
    for (size_t k = 0; k < plane; ++k) im.pix[k] = bytes[k] / 255.0f;
    d.images.push_back(std::move(im));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint8_t b = 0;
    io::read_bytes(f, &b, 1, "label payload");
    d.labels.push_back(b);
  }
  d.validate();
  return d;
}

namespace {

const std::vector<std::string>& cifar_class_names() {
  static const std::vector<std::string> names = {"airplane", "automobile", "bird", "cat",
                                                 "deer",     "dog",        "frog", "horse",
                                                 "ship",     "truck"};
  return names;
}

constexpr size_t kCifarRecord = 1 + 3 * kSize * kSize;  // label + channel-planar pixels

}  // namespace

ImageDataset load_cifar_batch(const std::string& path) {
  std::vector<std::uint8_t> bytes = io::read_file(path);
  if (bytes.empty() || bytes.size() % kCifarRecord != 0) {
    throw std::runtime_error("load_cifar_batch: " + path + " holds " +
                             std::to_string(bytes.size()) +
                             " bytes, expected a positive multiple of " +
                             std::to_string(kCifarRecord));
  }
  ImageDataset d;
  d.class_names = cifar_class_names();
  const size_t n = bytes.size() / kCifarRecord;
  for (size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kCifarRecord;
    if (rec[0] > 9) {
      throw std::runtime_error("load_cifar_batch: record " + std::to_string(i) +
                               " in " + path + " has label " + std::to_string(rec[0]) +
                               ", expected 0..9");
    }
    d.labels.push_back(rec[0]);
    img::Image im = img::Image::zeros(3, kSize, kSize);
    for (size_t k = 0; k < im.pix.size(); ++k) im.pix[k] = rec[1 + k] / 255.0f;
    d.images.push_back(std::move(im));
  }
  return d;
}

Cifar10 load_cifar10(const std::string& dir) {
  auto load_exact = [&](const std::string& name) {
    const std::string path = dir + "/" + name;
    std::vector<std::uint8_t> bytes = io::read_file(path);
    const size_t expected = 10000 * kCifarRecord;
    if (bytes.size() != expected) {
      throw std::runtime_error("load_cifar10: " + path + " holds " +
                               std::to_string(bytes.size()) + " bytes, expected " +
                               std::to_string(expected));
    }
    return load_cifar_batch(path);
  };
  Cifar10 out;
  out.train.class_names = cifar_class_names();
  for (int b = 1; b <= 5; ++b) {
    ImageDataset batch = load_exact("data_batch_" + std::to_string(b) + ".bin");
    out.train.images.insert(out.train.images.end(),
                            std::make_move_iterator(batch.images.begin()),
                            std::make_move_iterator(batch.images.end()));
    out.train.labels.insert(out.train.labels.end(), batch.labels.begin(), batch.labels.end());
  }
  out.test = load_exact("test_batch.bin");
  return out;
}

}  // namespace ctxf::data
