#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/types.hpp"

namespace fc::datagen {

enum class Kind { gaussian, uniform_ball, student_t, point_mass, axis_grid };

Kind kind_from_string(const std::string& s);
std::string kind_to_string(Kind k);

struct ComponentSpec {
  Kind kind = Kind::gaussian;
  Vec mean;
  double sigma = 1.0;   // covariance operator-norm bound (exact scale for all kinds)
  double weight = 0.0;
  double dof = 5.0;     // student_t only; must be > 2
};

struct MixtureSpec {
  Index dim = 0;
  double alpha = 0.0;              // lower bound on component weights
  double separation_factor = 0.0;  // required: ||mu_i - mu_j|| > f*(s_i+s_j)/sqrt(alpha)
  std::vector<ComponentSpec> components;

  // Throws invalid_argument naming the first violated constraint (weights sum
  // to 1 within 1e-9, min weight >= alpha, separation with 1e-9 slack,
  // dimensions consistent, student dof > 2).
  void validate() const;
};

std::string mixspec_to_json(const MixtureSpec& spec);
MixtureSpec mixspec_from_json(const std::string& text);
MixtureSpec load_mixspec(const std::string& path);
void save_mixspec(const MixtureSpec& spec, const std::string& path);

struct Generated {
  Dataset data;
  GroundTruth truth;
};

// Draw n points. Component sample counts are fixed proportional shares of n
// (largest-remainder rounding), point order is a seeded shuffle, and samples
// are drawn per point in index order; the result is a pure function of
// (spec, n, seed). Per-component populations have covariance <= sigma^2 I,
// with equality in operator norm for every kind except point_mass.
Generated generate(const MixtureSpec& spec, Index n, std::uint64_t seed);

enum class CorruptStrategy { far_blob, fake_cluster, bridge, replace_random };
CorruptStrategy strategy_from_string(const std::string& s);

struct CorruptInfo {
  IndexVec replaced;  // ascending; exactly floor(fraction*n) entries
};

// Replace floor(fraction*n) points in place, relabel them as outliers, and
// report exactly which rows changed.
//   far_blob:       tight clump at distance 1e6 * max component sigma
//   fake_cluster:   clump of size < 0.8*alpha*n near the first cluster mean
//   bridge:         points on segments between consecutive cluster means
//   replace_random: uniform points in the doubled bounding box of the data
CorruptInfo corrupt(Dataset& data, GroundTruth& truth, double fraction,
                    CorruptStrategy strategy, std::uint64_t seed);

// Axis-grid construction: d = ceil(1/(2*alpha)) axes, and for each axis a
// +/- pair of grid clusters offset by C/sqrt(alpha). Every cluster is a
// uniform 1-D grid of `grid_points` samples spanning [-1/2, 1/2] along its
// axis, so any 80% sub-grid keeps at least ~80% of the cluster scale while
// the whole set has covariance operator norm <= 2.1 C^2. The fine clustering
// (2d clusters) is returned as ground truth.
Generated nlsc_counterexample(double alpha, double C, Index grid_points);

// Four point-mass clusters in two tightly spaced pairs: locations (0,0),
// (1,0), (D,0), (D+1,0) with D = 1000, n/4 points each (n divisible by 4).
// Declared k = 3 admits two maximally-overlapping ground truths (merge the
// first pair or merge the second); they disagree on 25% of points.
struct TwoTruths {
  Dataset data;
  GroundTruth merged_first;   // {0,1}, {2}, {3}
  GroundTruth merged_second;  // {0}, {1}, {2,3}
};
TwoTruths nonidentifiable_fixture(Index n);

// Place k means pairwise further than separation_factor*(s_i+s_j)/sqrt(alpha)
// with the tightest pair sitting essentially on the bound. Requires k <= dim.
Mat separated_means(Index k, Index dim, const std::vector<double>& sigmas,
                    double alpha, double separation_factor);

// Named mixture presets. Pass 0 for dim / alpha / separation_factor to take
// the preset default.
//   separated_gaussians: three Gaussians, sigmas {0.5, 1, 2}, default d=10,
//     alpha=1/3, separation 12 (1.5x the practical working threshold).
//   scale_contrast: one unit-covariance cluster plus two sigma=1e-3 clusters
//     50 away whose means sit only 0.3 apart; default d=10, alpha=1/3.
MixtureSpec preset_mixspec(const std::string& name, Index dim, double alpha,
                           double separation_factor);

}  // namespace fc::datagen
