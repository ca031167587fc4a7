#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace slfr {

// Seeded RNG with named sub-streams. Every stochastic component draws from
// its own stream so that e.g. changing the negative-sampling ratio cannot
// perturb the initialization draws of an otherwise identical run.
//
// Normal variates use Box-Muller directly (no cached second draw) so the
// sequence depends only on the mt19937_64 state, not on library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static std::uint64_t mix(std::uint64_t seed, std::string_view purpose,
                           std::uint64_t index = 0) {
    // FNV-1a over the purpose tag, then splitmix-style avalanche.
    std::uint64_t h = 14695981039346656037ull;
    for (char c : purpose) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    std::uint64_t x = seed ^ h ^ (index * 0x9e3779b97f4a7c15ull);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }

  static Rng stream(std::uint64_t seed, std::string_view purpose,
                    std::uint64_t index = 0) {
    return Rng(mix(seed, purpose, index));
  }

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), n > 0. Rejection sampling, bias-free.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(i)]);
    }
  }

  // k distinct values from [0, n) in selection order.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k && i < n; ++i) {
      const std::uint64_t j = i + uniform_int(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace slfr
