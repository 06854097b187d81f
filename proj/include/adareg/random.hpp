#pragma once

#include <cstdint>
#include <random>

#include "adareg/model_core.hpp"

namespace adareg {

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for (parent, key). Chaining keeps sibling streams independent:
/// derive_seed(derive_seed(master, k), rep) names replication `rep` at level k.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) noexcept {
  return splitmix64(splitmix64(parent) ^ splitmix64(key + 0x632be59bd9b4e019ULL));
}

/// Named sub-streams of a dataset seed.
enum class Stream : std::uint64_t {
  kCovariates = 1,
  kNoise = 2,
  kAssignment = 3,
  kShift = 4,
  kTheta = 5,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
  return derive_seed(seed, static_cast<std::uint64_t>(s));
}

using Engine = std::mt19937_64;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  Vector normal_vector(Eigen::Index size) {
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = normal();
    return v;
  }

  /// Uniform on the unit sphere in R^size.
  Vector unit_sphere(Eigen::Index size) {
    for (;;) {
      Vector v = normal_vector(size);
      const double norm = v.norm();
      if (norm > 0.0) return v / norm;
    }
  }

 private:
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace adareg
