#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace htefs {

// 64-bit mixer used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for stream `stream` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t master, std::uint64_t stream) {
    return Rng(derive_seed(master, stream));
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return normal_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with our own index draw so results do not depend on
    // the standard library's shuffle implementation.
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace htefs
