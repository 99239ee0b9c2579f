#pragma once
// Shared synthetic inputs for the test binaries.

#include <cstdint>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace fixture {

using fc::Index;
using fc::IndexVec;
using fc::Mat;
using fc::Vec;

inline Mat gaussian_blob(fc::Rng& rng, Index n, Index d, double sigma,
                         const Vec& mean) {
  Mat pts(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      pts(i, j) = mean[j] + sigma * rng.normal();
  return pts;
}

inline Mat gaussian_blob(fc::Rng& rng, Index n, Index d, double sigma) {
  return gaussian_blob(rng, n, d, sigma, Vec::Zero(d));
}

inline IndexVec all_indices(Index n) {
  IndexVec idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

// Vertically stack rows of two matrices with equal column counts.
inline Mat vstack(const Mat& a, const Mat& b) {
  Mat out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

}  // namespace fixture
