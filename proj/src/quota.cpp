#include "pews/quota.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pews {

std::vector<std::size_t> quota_counts(const std::vector<double>& weights,
                                      std::size_t total) {
  if (weights.empty()) throw std::invalid_argument("quota_counts: no weights");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("quota_counts: negative weight");
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("quota_counts: zero weight sum");

  const std::size_t n = weights.size();
  std::vector<std::size_t> counts(n, 0);
  std::vector<double> frac(n, 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = weights[i] / sum * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(q));
    frac[i] = q - static_cast<double>(counts[i]);
    assigned += counts[i];
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total; ++i) {
    ++counts[order[i % n]];
    ++assigned;
  }
  return counts;
}

}  // namespace pews
