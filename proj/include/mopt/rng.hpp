#pragma once

#include <cstdint>
#include <string_view>

#include "mopt/common.hpp"

namespace mopt {

// SplitMix64-based counter generator. A stream is identified by
// (seed, context, name); its i-th output is a pure function of the stream key
// and i, so any prefix replays bit-exactly on every platform and in any
// re-implementation that follows the same recipe.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view context, std::string_view name)
      : key_(derive_key(seed, context, name)) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on the half-open interval [lo, hi), mapped from the top 53 bits.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  Vector uniform_vector(Index n, double lo, double hi) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  /// Row-major fill: row i is drawn completely before row i+1.
  Matrix uniform_matrix(Index rows, Index cols, double lo, double hi) {
    Matrix a(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) a(i, j) = uniform(lo, hi);
    return a;
  }

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ull;
    }
    return h;
  }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::string_view context,
                                  std::string_view name) {
    std::uint64_t k = mix64(seed + kGolden);
    k = mix64(k ^ fnv1a(context));
    k = mix64(k ^ fnv1a(name));
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mopt
