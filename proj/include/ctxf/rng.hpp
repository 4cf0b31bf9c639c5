#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace ctxf {

// Counter-based generator (SplitMix64 over a Weyl sequence). Every stochastic
// routine in the repo takes one of these by reference; there is no global RNG.
// fork() derives an independent stream from (key, a, b), so per-sample streams
// do not depend on evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGolden)) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  Rng fork(std::uint64_t a, std::uint64_t b = 0) const {
    Rng child(0);
    child.state_ = mix(mix(state_ ^ (a * 0x9E3779B97F4A7C15ULL)) ^ (b * 0xD1B54A32D192ED03ULL));
    return child;
  }

  // Uniform in [0, 1).
  float uniform() {
    return static_cast<float>((next_u64() >> 40) * 0x1.0p-24);
  }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the pair's second value is discarded so the
  // stream position never depends on call history.
  float normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) *
                              std::cos(6.283185307179586 * u2));
  }

  // Uniform integer in [0, n).
  int randint(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = randint(i + 1);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace ctxf
