#pragma once

#include <cstddef>
#include <vector>

namespace pews {

// Largest-remainder apportionment of `total` items over nonnegative weights.
// Weights are normalized internally; ties on the fractional part go to the
// lower index. The returned counts always sum to `total`.
std::vector<std::size_t> quota_counts(const std::vector<double>& weights,
                                      std::size_t total);

}  // namespace pews
