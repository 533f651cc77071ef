#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "otk/enumeration.hpp"
#include "otk/errors.hpp"
#include "otk/model.hpp"

namespace otk {

// Binary selection vector with exactly k ones.
struct IndicatorVector {
  Vector bits;
  Index k;
};

inline IndicatorVector indicator_from_support(Index n, const SupportSet& s) {
  Vector bits = Vector::Zero(n);
  for (int i : s) bits[i] = 1.0;
  return IndicatorVector{std::move(bits), static_cast<Index>(s.size())};
}

// Result of hard k-thresholding. The support lists the nonzero positions of
// the output (at most k of them). tie_flag reports whether the k-th and
// (k+1)-th largest magnitudes coincide exactly, i.e. whether the operator
// was set-valued at this input.
struct ThresholdResult {
  Vector vector;
  SupportSet support;
  bool tie_flag;
};

namespace detail {

// Total order making the selection deterministic: larger magnitude first,
// smaller index first among equal magnitudes.
struct MagnitudeOrder {
  const Vector& z;
  bool operator()(int a, int b) const {
    double ma = std::abs(z[a]), mb = std::abs(z[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  }
};

inline void check_k(Index k, Index n, const char* who) {
  if (k < 1 || k > n)
    throw input_error(std::string(who) + ": k must be in [1, n]");
}

// Indices of the k entries kept by the deterministic tie-break, unsorted.
inline std::vector<int> select_top_k(const Vector& z, Index k) {
  std::vector<int> idx(z.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (k < z.size())
    std::nth_element(idx.begin(), idx.begin() + k, idx.end(),
                     MagnitudeOrder{z});
  idx.resize(k);
  return idx;
}

}  // namespace detail

inline ThresholdResult hard_threshold(const Vector& z, Index k) {
  detail::check_k(k, z.size(), "hard_threshold");
  const Index n = z.size();
  std::vector<int> keep = detail::select_top_k(z, k);

  bool tie = false;
  if (k < n) {
    // k-th largest magnitude = weakest kept entry; (k+1)-th = strongest
    // dropped entry. Exact comparison, matching the set-valuedness test.
    double zk = std::abs(z[keep[0]]);
    for (int i : keep) zk = std::min(zk, std::abs(z[i]));
    std::vector<char> kept(n, 0);
    for (int i : keep) kept[i] = 1;
    double zk1 = 0.0;
    bool any = false;
    for (Index i = 0; i < n; ++i)
      if (!kept[i]) {
        double m = std::abs(z[i]);
        if (!any || m > zk1) zk1 = m;
        any = true;
      }
    tie = any && zk == zk1;
  }

  Vector out = Vector::Zero(n);
  SupportSet support;
  std::sort(keep.begin(), keep.end());
  for (int i : keep)
    if (z[i] != 0.0) {
      out[i] = z[i];
      support.push_back(i);
    }
  return ThresholdResult{std::move(out), std::move(support), tie};
}

// Sum of the n-k smallest magnitudes (the l1 error of the best k-term
// approximation). Partial selection, no full sort.
inline double best_k_term_error(const Vector& z, Index k) {
  detail::check_k(k, z.size(), "best_k_term_error");
  const Index n = z.size();
  if (k == n) return 0.0;
  std::vector<double> mag(n);
  for (Index i = 0; i < n; ++i) mag[i] = std::abs(z[i]);
  std::nth_element(mag.begin(), mag.begin() + (n - k), mag.end());
  double s = 0.0;
  for (Index i = 0; i < n - k; ++i) s += mag[i];
  return s;
}

// Optimal value of the continuous relaxation of the k-term selection
// problem min |z|'(e - w) over the capped simplex. The relaxation is tight,
// so this equals best_k_term_error; computed here by an independent route
// (full descending sort, tail sum) and cross-checked against enumeration
// in the tests.
inline double lp_relaxation_value(const Vector& z, Index k) {
  detail::check_k(k, z.size(), "lp_relaxation_value");
  std::vector<double> mag(z.size());
  for (Index i = 0; i < z.size(); ++i) mag[i] = std::abs(z[i]);
  std::sort(mag.begin(), mag.end(), std::greater<double>());
  double s = 0.0;
  for (Index i = k; i < z.size(); ++i) s += mag[i];
  return s;
}

// All binary indicators w with exactly k ones attaining
// |z|'(e - w) = best_k_term_error(z, k): the selections of k largest
// magnitudes. Singleton exactly when the threshold magnitude is not tied.
inline std::vector<IndicatorVector> enumerate_optimal_indicators(
    const Vector& z, Index k, std::uint64_t guard = 1'000'000) {
  detail::check_k(k, z.size(), "enumerate_optimal_indicators");
  const Index n = z.size();
  if (binomial_capped(static_cast<int>(n), static_cast<int>(k), guard) > guard)
    throw guard_error("enumerate_optimal_indicators: C(n,k) exceeds guard " +
                      std::to_string(guard));

  // Threshold magnitude = k-th largest; entries strictly above it are
  // forced, entries equal to it are interchangeable.
  std::vector<int> keep = detail::select_top_k(z, k);
  double thr = std::abs(z[keep[0]]);
  for (int i : keep) thr = std::min(thr, std::abs(z[i]));

  std::vector<int> forced, tied;
  for (Index i = 0; i < n; ++i) {
    double m = std::abs(z[i]);
    if (m > thr)
      forced.push_back(static_cast<int>(i));
    else if (m == thr)
      tied.push_back(static_cast<int>(i));
  }
  const int need = static_cast<int>(k) - static_cast<int>(forced.size());

  std::vector<IndicatorVector> out;
  for_each_combination(
      static_cast<int>(tied.size()), need, [&](const std::vector<int>& pick) {
        SupportSet s(forced.begin(), forced.end());
        for (int t : pick) s.push_back(tied[t]);
        std::sort(s.begin(), s.end());
        out.push_back(indicator_from_support(n, s));
      });
  return out;
}

}  // namespace otk
