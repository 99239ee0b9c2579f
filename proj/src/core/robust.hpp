#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "core/types.hpp"

namespace fc::robust {

struct StdevList {
  std::vector<double> values;  // ascending, deduplicated
  bool degenerate = false;     // all points identical; values empty
};

// Candidate scale list built from every pair: sqrt(2) * sqrt(2^-j) * ||x-y||
// for j = 0..ceil(log2(2 m^2)), deduplicated at relative 1e-12 and sorted.
// For every subset S of the input with a positive spread, the list contains
// a value s with ||Cov(S)||_op <= s^2 <= 2 ||Cov(S)||_op.
StdevList candidate_stdevs(const Mat& points);

// Geometric ladder with the same covering guarantee but O(log) size: values
// descend from sqrt(2)*d_max by factors of sqrt(2) to below d_min/(sqrt(2)m),
// where d_max/d_min are the extreme positive pairwise distances. Suitable for
// inputs whose quadratic pair list would be too large to iterate.
StdevList scale_ladder(const Mat& points);
StdevList scale_ladder_from_extremes(double d_min, double d_max, Index m);

struct FilterResult {
  IndexVec kept;       // subset of the input indices, ascending
  int iterations = 0;
  double final_top_eigenvalue = 0.0;
  double stop_threshold = 0.0;
};

struct FilterParams {
  double epsilon = 0.04;
  double stop_mult = 9.0;   // stop when top eig <= stop_mult * robust scale^2
  double iter_cap_mult = 10.0;  // cap = iter_cap_mult * |A|
};

// Randomized spectral score filter. Repeatedly: take the top eigenvector v of
// the covariance of the kept set, score each point by (v.(x - mean))^2, and
// drop each point with probability score/max score, until the top eigenvalue
// falls to stop_mult times a robust scale^2. The robust scale estimate is the
// larger of the median squared distance to the coordinate-wise median divided
// by d, and the median squared deviation along v itself; both medians resist
// an epsilon fraction of planted points, and the second keeps sets whose
// spread sits in a few directions from reading as corrupted. On a clean
// bounded-covariance set the threshold holds immediately and nothing is
// removed; planted far outliers are removed with probability ~1 per round.
FilterResult filter(const Mat& points, std::span<const Index> subset,
                    const FilterParams& params, std::uint64_t seed);

struct Candidate {
  Vec mean;
  Index origin_point = -1;  // data point the candidate came from
  Index count = 0;          // ball population at selection time
};

struct DecoderParams {
  double c_ld = 2.0;          // radius constant
  double radius_factor = 2.0; // r = radius_factor * c_ld * s / sqrt(alpha)
  double count_factor = 0.5;  // keep points with >= count_factor * alpha * |T|
};

// Shared pairwise-distance index: each row's distances to all points, sorted
// ascending. Built once, queried per scale.
class PairDistances {
 public:
  explicit PairDistances(const Mat& points);
  Index count_within(Index row, double radius) const;  // |{y: d(x_row,y) <= r}|
  double min_positive() const { return min_positive_; }
  double max() const { return max_; }
  Index n() const { return static_cast<Index>(sorted_.size()); }

 private:
  std::vector<std::vector<double>> sorted_;  // squared distances per row
  double min_positive_ = 0.0;
  double max_ = 0.0;
};

// Dense-ball list decoder at scale s: candidates are data points whose ball
// of radius r = radius_factor*c_ld*s/sqrt(alpha) holds at least
// count_factor*alpha*|T| points, greedily deduplicated at radius r in
// decreasing-count order. At most floor(2/alpha) candidates are returned,
// highest counts first.
std::vector<Candidate> list_decode_means(const Mat& points,
                                         const PairDistances& dists,
                                         double s, double alpha,
                                         const DecoderParams& params);

// Pluggable decoder type used by the pipeline.
using Decoder = std::function<std::vector<Candidate>(
    const Mat&, const PairDistances&, double /*s*/, double /*alpha*/)>;

struct StabilityReport {
  double c_est = 0.0;        // smallest C certifying both clauses
  double worst_mean_shift = 0.0;   // max ||mu_w - mu|| / (sigma sqrt(eps))
  double worst_cov_ratio = 0.0;    // max lambda_max(second moment / mass) / sigma^2
  bool exhaustive = false;
  Index removals_checked = 0;
};

// Certificate that a set is (C, eps)-stable about (mu, sigma), evaluated over
// integral removals of at most floor(eps*m) points: exhaustive enumeration
// when m <= 18, otherwise `trials` seeded random removals plus greedy
// adversarial ones (largest deviations first). One-sided: a reported C can
// undershoot the true constant in sampled mode.
StabilityReport stability_certificate(const Mat& points,
                                      std::span<const Index> subset,
                                      const Vec& mu, double sigma, double eps,
                                      Index trials, std::uint64_t seed);

}  // namespace fc::robust
