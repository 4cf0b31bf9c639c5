#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxf/image.hpp"
#include "ctxf/synthetic_spec.hpp"

namespace ctxf::data {

inline constexpr float kDarkBackground = 0.12f;
inline constexpr float kLightBackground = 0.85f;
inline constexpr std::uint32_t kDatasetVersion = 1;

struct ImageDataset {
  std::vector<img::Image> images;  // 3x32x32, values in [0,1]
  std::vector<int> labels;         // indices into class_names
  std::vector<std::string> class_names;

  int n() const { return static_cast<int>(images.size()); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
  std::vector<int> class_counts() const;
  // Checks label range, per-image shape agreement, and the [0,1] pixel range.
  void validate() const;
};

// Procedurally renders jittered, rotated, textured shapes on a flat
// background, one RNG stream per (class, sample) so generation order never
// matters. Pixels are snapped to the u8 grid, making the on-disk container
// lossless for generated data.
ImageDataset generate(const synthetic::Spec& spec, int n_per_class, std::uint64_t seed);

// Parametric source→target distribution shift. Identity parameters return a
// bitwise-equal copy. Applied in order: background swap, size scale,
// brightness, noise; one clamp to [0,1] at the end.
struct DomainShift {
  float brightness = 0.0f;       // additive, in [-1, 1]
  float size_scale = 1.0f;       // zoom factor, in (0, 4]
  bool background_swap = false;  // dark <-> light flat-background pixels
  float noise_std = 0.0f;        // Gaussian pixel noise, in [0, 1]
};

ImageDataset shift(const ImageDataset& d, const DomainShift& s, std::uint64_t seed);

// Target-domain class roster: one source class dropped, one unseen class
// appended (the dropped/added analog of a benchmark swapping a class out).
synthetic::Spec make_target_spec(const synthetic::Spec& source, const std::string& drop,
                                 const synthetic::ClassSpec& add);

// Binary container: "CTXD" magic, version, n, H, W, C, class table, u8
// pixels, one label byte per image.
void save_dataset(const std::string& path, const ImageDataset& d);
ImageDataset load_dataset(const std::string& path);

// One CIFAR-10 binary batch: records of 1 label byte + 3072 channel-planar
// pixel bytes. File size must be an exact multiple of the record size.
ImageDataset load_cifar_batch(const std::string& path);

struct Cifar10 {
  ImageDataset train;
  ImageDataset test;
};

// Loads data_batch_1..5.bin and test_batch.bin from a directory; each file
// must hold exactly 10000 records.
Cifar10 load_cifar10(const std::string& dir);

}  // namespace ctxf::data
