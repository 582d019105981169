#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace kgrec {

/// splitmix64 finalizer. Used to derive independent stream seeds from a base
/// seed plus stream tags, so that draws for one purpose (negative sampling,
/// neighbor capping, ...) never depend on how often another stream was used.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b), c);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                              std::uint64_t d) {
  return mix64(mix64(a, b, c), d);
}

/// Fixed tags naming each seeded stream. Part of the reproducibility
/// contract: results for a given base seed are stable across runs.
namespace stream {
inline constexpr std::uint64_t kInitParams = 0x01;
inline constexpr std::uint64_t kNeighborCap = 0x02;
inline constexpr std::uint64_t kSplit = 0x03;
inline constexpr std::uint64_t kShuffle = 0x04;
inline constexpr std::uint64_t kNegatives = 0x05;
inline constexpr std::uint64_t kValidation = 0x06;
inline constexpr std::uint64_t kPlanted = 0x07;
}  // namespace stream

/// Deterministic RNG. Wraps std::mt19937_64 (whose output sequence is
/// specified by the standard) and maps to doubles/ranges without
/// std::uniform_*_distribution, which is implementation-defined. This keeps
/// seeded results byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased uniform integer in [0, n). Requires n >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  /// In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      int j = i + below_int(n - i);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace kgrec
