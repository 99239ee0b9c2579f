#pragma once

#include <cstdint>
#include <vector>

#include "core/types.hpp"

namespace fc::baseline {

// Classical comparator: project onto the top-k principal components, then
// run seeded k-means++ / Lloyd in the projected space. Every point gets a
// label in [0,k). Deterministic given (points, k, iters, seed).
std::vector<std::int32_t> kpca_kmeans(const Mat& points, int k, int iters,
                                      std::uint64_t seed);

}  // namespace fc::baseline
