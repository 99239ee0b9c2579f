#include "core/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/rng.hpp"
#include "core/spectral.hpp"

namespace fc::baseline {

namespace {

// k-means++ seeding: first center uniform, then proportional to squared
// distance from the chosen set.
Mat seed_centers(const Mat& y, int k, Rng& rng) {
  const Index n = y.rows();
  Mat centers(k, y.cols());
  Index first = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  centers.row(0) = y.row(first);
  Vec dist_sq(n);
  for (Index i = 0; i < n; ++i)
    dist_sq(i) = (y.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = dist_sq.sum();
    Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += dist_sq(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = y.row(pick);
    for (Index i = 0; i < n; ++i)
      dist_sq(i) =
          std::min(dist_sq(i), (y.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

}  // namespace

std::vector<std::int32_t> kpca_kmeans(const Mat& points, int k, int iters,
                                      std::uint64_t seed) {
  const Index n = points.rows();
  require(n >= 1, ErrorCode::invalid_argument, "need at least one point");
  require(k >= 1 && static_cast<Index>(k) <= n, ErrorCode::invalid_argument,
          "cluster count must lie in [1, n]");
  require(iters >= 1, ErrorCode::invalid_argument, "need at least one pass");

  Vec mean = points.colwise().mean().transpose();
  Mat centered = points.rowwise() - mean.transpose();
  Mat cov = Mat::Zero(points.cols(), points.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                 1.0 / static_cast<double>(n));
  cov = Mat(cov.selfadjointView<Eigen::Lower>());
  int proj_dim = static_cast<int>(std::min<Index>(k, points.cols()));
  spectral::EigPairs eig =
      spectral::top_k_eigs(spectral::SymMatrix(cov), proj_dim);
  Mat y = centered * eig.vectors;

  Rng rng(derive_seed(seed, 0xBA5E11));
  Mat centers = seed_centers(y, k, rng);

  std::vector<std::int32_t> labels(static_cast<std::size_t>(n), 0);
  for (int pass = 0; pass < iters; ++pass) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_sq = (y.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double sq = (y.row(i) - centers.row(c)).squaredNorm();
        if (sq < best_sq) {
          best_sq = sq;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(best);
        changed = true;
      }
    }
    if (!changed && pass > 0) break;

    Mat sums = Mat::Zero(k, y.cols());
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += y.row(i);
      ++sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) =
            sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: restart it at the point farthest from its center.
      Index far = 0;
      double far_sq = -1.0;
      for (Index i = 0; i < n; ++i) {
        double sq =
            (y.row(i) -
             centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (sq > far_sq) {
          far_sq = sq;
          far = i;
        }
      }
      centers.row(c) = y.row(far);
    }
  }
  return labels;
}

}  // namespace fc::baseline
