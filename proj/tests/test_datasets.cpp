#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ctxf/datasets.hpp"
#include "ctxf/gkg.hpp"
#include "ctxf/io.hpp"
#include "ctxf/kg.hpp"
#include "ctxf/synthetic_spec.hpp"

using namespace ctxf;
using namespace ctxf::data;

namespace {

bool same_pixels(const img::Image& a, const img::Image& b) {
  return a.pix.size() == b.pix.size() &&
         std::memcmp(a.pix.data(), b.pix.data(), a.pix.size() * sizeof(float)) == 0;
}

bool same_images(const ImageDataset& a, const ImageDataset& b) {
  if (a.n() != b.n()) return false;
  for (int i = 0; i < a.n(); ++i)
    if (!same_pixels(a.images[i], b.images[i])) return false;
  return true;
}

// Foreground = pixels that are not the flat background (channels unequal, or
// equal but away from both background levels).
bool is_background(const img::Image& im, int y, int x) {
  const float r = im.at(0, y, x), g = im.at(1, y, x), b = im.at(2, y, x);
  if (r != g || g != b) return false;
  return std::fabs(r - kDarkBackground) < 2e-3f || std::fabs(r - kLightBackground) < 2e-3f;
}

// A minimal two-supercategory spec for focused rendering checks.
synthetic::Spec tiny_spec() {
  return synthetic::Spec{{
      {"ruby", "rounded", "circle", "red", "uniform", "dark"},
      {"sky", "angular", "square", "blue", "uniform", "light"},
  }};
}

}  // namespace

TEST_SUITE_BEGIN("datasets");

TEST_CASE("generation is balanced and deterministic") {
  synthetic::Spec spec = synthetic::default_spec();
  ImageDataset d = generate(spec, 50, 0);
  CHECK(d.n() == 500);
  CHECK(d.n_classes() == 10);
  for (int c : d.class_counts()) CHECK(c == 50);
  for (size_t i = 0; i < spec.classes.size(); ++i)
    CHECK(d.class_names[i] == spec.classes[i].name);
  d.validate();

  ImageDataset d2 = generate(spec, 50, 0);
  CHECK(same_images(d, d2));
  CHECK(d2.labels == d.labels);

  ImageDataset d3 = generate(spec, 50, 1);
  CHECK_FALSE(same_images(d, d3));
}

TEST_CASE("rendered colors land on the right channels") {
  ImageDataset d = generate(tiny_spec(), 8, 3);
  double red_r = 0, red_b = 0, blue_r = 0, blue_b = 0;
  int n_red = 0, n_blue = 0;
  for (int i = 0; i < d.n(); ++i) {
    const img::Image& im = d.images[i];
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) {
        if (is_background(im, y, x)) continue;
        if (d.labels[i] == 0) {
          red_r += im.at(0, y, x);
          red_b += im.at(2, y, x);
          ++n_red;
        } else {
          blue_r += im.at(0, y, x);
          blue_b += im.at(2, y, x);
          ++n_blue;
        }
      }
  }
  REQUIRE(n_red > 100);   // the shapes actually cover pixels
  REQUIRE(n_blue > 100);
  CHECK(red_r / n_red > red_b / n_red);    // red class: R channel dominates
  CHECK(blue_b / n_blue > blue_r / n_blue);  // blue class: B channel dominates
}

TEST_CASE("background attribute controls overall brightness") {
  ImageDataset d = generate(tiny_spec(), 4, 5);
  // Corner pixels sit on the flat background.
  for (int i = 0; i < d.n(); ++i) {
    const float corner = d.images[i].at(0, 0, 0);
    const float expected = d.labels[i] == 0 ? kDarkBackground : kLightBackground;
    CHECK(corner == doctest::Approx(expected).epsilon(2e-3));
  }
}

TEST_CASE("generated classes agree with the synthetic knowledge graph") {
  synthetic::Spec spec = synthetic::default_spec();
  kg::KnowledgeGraph g = kg::build_synthetic_gkg(spec);
  ImageDataset d = generate(spec, 2, 0);
  CHECK(d.class_names == g.class_list());
  // Channel dominance per class follows the color named in the graph triples.
  for (size_t c = 0; c < spec.classes.size(); ++c) {
    CHECK(g.triples().end() !=
          std::find(g.triples().begin(), g.triples().end(),
                    kg::Triple{kg::cls(spec.classes[c].name), kg::prop("hasColor"),
                               kg::ind(spec.classes[c].color)}));
  }
}

TEST_CASE("generation validates its inputs") {
  synthetic::Spec empty;
  CHECK_THROWS_AS(generate(empty, 5, 0), std::invalid_argument);

  synthetic::Spec one_super{{{"a", "rounded", "circle", "red", "uniform", "dark"},
                             {"b", "rounded", "square", "blue", "uniform", "light"}}};
  CHECK_THROWS_WITH_AS(generate(one_super, 5, 0), doctest::Contains("supercategories"),
                       std::invalid_argument);

  synthetic::Spec dup{{{"a", "rounded", "circle", "red", "uniform", "dark"},
                       {"a", "angular", "square", "blue", "uniform", "light"}}};
  CHECK_THROWS_WITH_AS(generate(dup, 5, 0), doctest::Contains("duplicate"),
                       std::invalid_argument);

  synthetic::Spec bad_color{{{"a", "rounded", "circle", "ultraviolet", "uniform", "dark"},
                             {"b", "angular", "square", "blue", "uniform", "light"}}};
  CHECK_THROWS_WITH_AS(generate(bad_color, 1, 0), doctest::Contains("unknown color"),
                       std::invalid_argument);
  CHECK_THROWS_AS(generate(tiny_spec(), 0, 0), std::invalid_argument);
}

TEST_CASE("identity shift is a bitwise no-op") {
  ImageDataset d = generate(tiny_spec(), 6, 1);
  ImageDataset s = shift(d, DomainShift{}, 9);
  CHECK(same_images(d, s));
  CHECK(s.labels == d.labels);
  CHECK(s.class_names == d.class_names);
}

TEST_CASE("brightness shift clamps at 1") {
  ImageDataset d = generate(tiny_spec(), 4, 2);
  DomainShift s;
  s.brightness = 0.2f;
  ImageDataset out = shift(d, s, 0);
  bool clamped = false;
  for (int i = 0; i < d.n(); ++i) {
    for (size_t k = 0; k < d.images[i].pix.size(); ++k) {
      const float before = d.images[i].pix[k];
      const float after = out.images[i].pix[k];
      CHECK(after <= 1.0f);
      CHECK(after >= before);
      if (before > 0.8f) {
        CHECK(after == 1.0f);
        clamped = true;
      }
    }
  }
  CHECK(clamped);  // the light background pushes past 1.0
}

TEST_CASE("noise magnitude matches the folded-normal expectation") {
  ImageDataset d = generate(synthetic::default_spec(), 10, 4);
  DomainShift s;
  s.noise_std = 0.05f;
  ImageDataset out = shift(d, s, 11);
  double delta = 0.0;
  std::int64_t n = 0;
  for (int i = 0; i < d.n(); ++i)
    for (size_t k = 0; k < d.images[i].pix.size(); ++k) {
      delta += std::fabs(out.images[i].pix[k] - d.images[i].pix[k]);
      ++n;
    }
  const double mean_abs = delta / n;
  CHECK(mean_abs >= 0.03);
  CHECK(mean_abs <= 0.05);

  // Deterministic under a fixed seed.
  CHECK(same_images(out, shift(d, s, 11)));
  CHECK_FALSE(same_images(out, shift(d, s, 12)));
}

TEST_CASE("background swap exchanges the flat levels") {
  ImageDataset d = generate(tiny_spec(), 3, 6);
  DomainShift s;
  s.background_swap = true;
  ImageDataset out = shift(d, s, 0);
  for (int i = 0; i < d.n(); ++i) {
    const float before = d.images[i].at(0, 0, 0);
    const float after = out.images[i].at(0, 0, 0);
    if (std::fabs(before - kDarkBackground) < 2e-3f) {
      CHECK(after == kLightBackground);
    } else {
      CHECK(after == kDarkBackground);
    }
  }
}

TEST_CASE("size scale shrinks the foreground") {
  ImageDataset d = generate(tiny_spec(), 5, 7);
  DomainShift s;
  s.size_scale = 0.5f;
  ImageDataset out = shift(d, s, 0);
  auto foreground_count = [](const img::Image& im) {
    int n = 0;
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x)
        if (!is_background(im, y, x)) ++n;
    return n;
  };
  int shrank = 0;
  for (int i = 0; i < d.n(); ++i) {
    if (foreground_count(out.images[i]) < foreground_count(d.images[i])) ++shrank;
    CHECK(out.images[i].height == 32);
    CHECK(out.images[i].width == 32);
  }
  CHECK(shrank == d.n());
}

TEST_CASE("shift validates parameter ranges") {
  ImageDataset d = generate(tiny_spec(), 1, 0);
  DomainShift s;
  s.brightness = 1.5f;
  CHECK_THROWS_AS(shift(d, s, 0), std::invalid_argument);
  s = DomainShift{};
  s.size_scale = 0.0f;
  CHECK_THROWS_AS(shift(d, s, 0), std::invalid_argument);
  s = DomainShift{};
  s.noise_std = 2.0f;
  CHECK_THROWS_AS(shift(d, s, 0), std::invalid_argument);
}

TEST_CASE("target spec swaps one class for an unseen one") {
  synthetic::Spec source = synthetic::default_spec();
  synthetic::Spec target = make_target_spec(source, "star", synthetic::target_only_class());
  CHECK(target.classes.size() == source.classes.size());
  CHECK(target.classes.back().name == "clover");
  for (const auto& c : target.classes) CHECK(c.name != "star");

  CHECK_THROWS_WITH_AS(make_target_spec(source, "comet", synthetic::target_only_class()),
                       doctest::Contains("no class 'comet'"), std::invalid_argument);
  CHECK_THROWS_AS(make_target_spec(source, "star", source.classes[0]), std::invalid_argument);
}

TEST_CASE("dataset container round-trips generated data losslessly") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "ctxf_ctxd_test";
  fs::create_directories(dir);
  const std::string path = (dir / "d.bin").string();

  ImageDataset d = generate(tiny_spec(), 4, 8);
  save_dataset(path, d);
  ImageDataset d2 = load_dataset(path);
  CHECK(same_images(d, d2));  // generation snaps to the u8 grid
  CHECK(d2.labels == d.labels);
  CHECK(d2.class_names == d.class_names);

  const std::string path2 = (dir / "d2.bin").string();
  save_dataset(path2, d2);
  CHECK(io::read_file(path) == io::read_file(path2));

  // Error paths: foreign magic, truncation.
  io::write_file((dir / "junk.bin").string(), "ABCD123");
  CHECK_THROWS_AS(load_dataset((dir / "junk.bin").string()), std::runtime_error);
  std::vector<std::uint8_t> whole = io::read_file(path);
  io::write_file((dir / "trunc.bin").string(),
                 std::string(reinterpret_cast<const char*>(whole.data()), whole.size() - 100));
  CHECK_THROWS_WITH_AS(load_dataset((dir / "trunc.bin").string()),
                       doctest::Contains("truncated"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("cifar batch reader decodes crafted records exactly") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "ctxf_cifar_test";
  fs::create_directories(dir);
  const std::string path = (dir / "fixture.bin").string();

  // Three records with distinctive label and pixel bytes.
  const size_t record = 3073;
  std::string bytes(3 * record, '\0');
  bytes[0 * record] = 7;
  bytes[0 * record + 1] = static_cast<char>(255);  // first red pixel of record 0
  bytes[0 * record + 2] = static_cast<char>(128);
  bytes[1 * record] = 0;
  bytes[1 * record + 3072] = static_cast<char>(19);  // last blue pixel of record 1
  bytes[2 * record] = 9;
  io::write_file(path, bytes);

  ImageDataset d = load_cifar_batch(path);
  CHECK(d.n() == 3);
  CHECK(d.labels == std::vector<int>{7, 0, 9});
  CHECK(d.class_names.size() == 10);
  CHECK(d.class_names[7] == "horse");
  CHECK(d.images[0].at(0, 0, 0) == 1.0f);
  CHECK(d.images[0].at(0, 0, 1) == 128.0f / 255.0f);
  CHECK(d.images[1].at(2, 31, 31) == 19.0f / 255.0f);
  CHECK(d.images[2].at(1, 5, 5) == 0.0f);

  // Truncated file: error names the byte counts.
  io::write_file((dir / "short.bin").string(), bytes.substr(0, 2 * record + 100));
  CHECK_THROWS_WITH_AS(load_cifar_batch((dir / "short.bin").string()),
                       doctest::Contains("3073"), std::runtime_error);

  // Out-of-range label byte.
  bytes[0] = 12;
  io::write_file((dir / "badlabel.bin").string(), bytes);
  CHECK_THROWS_WITH_AS(load_cifar_batch((dir / "badlabel.bin").string()),
                       doctest::Contains("label 12"), std::runtime_error);

  // Full-dataset loader requires exactly 10000 records per file.
  io::write_file((dir / "data_batch_1.bin").string(), bytes);
  CHECK_THROWS_WITH_AS(load_cifar10(dir.string()), doctest::Contains("30730000"),
                       std::runtime_error);
  fs::remove_all(dir);
}

TEST_SUITE_END();
