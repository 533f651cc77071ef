#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "otk/errors.hpp"
#include "otk/model.hpp"

namespace otk {

// Counter-based generator. Every quantity below is part of the replay
// contract and must not change:
//
//   GAMMA  = 0x9E3779B97F4A7C15 (odd; 2^64 over the golden ratio)
//   mix64  = xorshift-multiply finalizer with multipliers
//            0xBF58476D1CE4E5B9 and 0x94D049BB133111EB (SplitMix64)
//   block i of the stream keyed by s:  mix64(s + GAMMA * i), i = 1, 2, ...
//   child stream derivation:           child(s, a) = mix64(s ^ (GAMMA * (a + 1)))
//   uniform in [0,1):                  (block >> 11) * 2^-53
//   uniform in (0,1]:                  ((block >> 11) + 1) * 2^-53
//   standard normals: Box-Muller pairs. u1 in (0,1] then u2 in [0,1) are
//   drawn, z0 = sqrt(-2 ln u1) cos(2 pi u2) is returned first and
//   z1 = sqrt(-2 ln u1) sin(2 pi u2) on the following call.
//   bounded integers: 64-bit rejection sampling, threshold (-bound) mod
//   bound, accepted block reduced modulo bound (no modulo bias).
inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t child_stream(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ (kGamma * (index + 1)));
}

class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + kGamma * ++counter_); }

  double next_unit() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1p-53;
  }

  double next_unit_pos() {  // (0, 1]
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_unit_pos();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw input_error("Rng::next_below: bound must be > 0");
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t x = next_u64();
      if (x >= threshold) return x % bound;
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Standard-normal matrix, entries drawn in column-major order (all of
// column 0 top to bottom, then column 1, ...).
inline Matrix gen_gaussian_matrix(Index m, Index n, std::uint64_t seed) {
  if (m < 1 || n < 1)
    throw input_error("gen_gaussian_matrix: dimensions must be >= 1");
  Rng rng(seed);
  Matrix A(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) A(i, j) = rng.next_gaussian();
  return A;
}

// k-sparse signal: a uniformly random k-subset support (partial Fisher-
// Yates, k bounded draws), then standard-normal values assigned to the
// support in ascending index order. An exact-zero draw is resampled so the
// realized sparsity is always k.
inline SparseSignal gen_sparse_signal(Index n, Index k, std::uint64_t seed) {
  if (k < 1 || k > n)
    throw input_error("gen_sparse_signal: k must be in [1, n]");
  Rng rng(seed);
  std::vector<int> idx(n);
  for (Index i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  for (Index t = 0; t < k; ++t) {
    Index j = t + static_cast<Index>(
                      rng.next_below(static_cast<std::uint64_t>(n - t)));
    std::swap(idx[t], idx[j]);
  }
  SupportSet support(idx.begin(), idx.begin() + k);
  std::sort(support.begin(), support.end());

  Vector x = Vector::Zero(n);
  for (int i : support) {
    double v = rng.next_gaussian();
    while (v == 0.0) v = rng.next_gaussian();
    x[i] = v;
  }
  return SparseSignal{std::move(x), k};
}

// Standard-normal vector, for noise terms.
inline Vector gen_gaussian_vector(Index n, Rng& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.next_gaussian();
  return v;
}

}  // namespace otk
