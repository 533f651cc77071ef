#pragma once

#include <cstdint>
#include <vector>

namespace otk {

// C(n,k), saturating at cap+1 so callers can test "count > cap" without
// overflow. Computed with the exact integer recurrence c = c*(n-k+i)/i.
inline std::uint64_t binomial_capped(int n, int k, std::uint64_t cap) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t c = 1;
  for (int i = 1; i <= k; ++i) {
    std::uint64_t f = static_cast<std::uint64_t>(n - k + i);
    if (c > (UINT64_MAX / f)) return cap + 1;
    c = c * f / static_cast<std::uint64_t>(i);
    if (c > cap) return cap + 1;
  }
  return c;
}

// Visits every k-subset of {0..n-1} in lexicographic order.
// fn receives the current index set as a sorted vector.
template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(static_cast<const std::vector<int>&>(idx));
    int j = k - 1;
    while (j >= 0 && idx[j] == n - k + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int t = j + 1; t < k; ++t) idx[t] = idx[t - 1] + 1;
  }
}

}  // namespace otk
