#pragma once

#include <span>

#include "core/types.hpp"

namespace fc::spectral {

// Symmetric matrix wrapper. Construction validates symmetry (relative 1e-12)
// and finiteness, then stores the symmetrized matrix, so downstream solvers
// never see asymmetric round-off.
class SymMatrix {
 public:
  explicit SymMatrix(Mat m);
  static SymMatrix zero(Index dim) { return SymMatrix(Mat::Zero(dim, dim)); }

  const Mat& mat() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  Mat m_;
};

struct EigPairs {
  Vec values;  // descending
  Mat vectors; // column i pairs with values[i]; orthonormal
};

// k largest (algebraic) eigenvalues and eigenvectors. Dense decomposition up
// to dim 64, Lanczos with full reorthogonalization above; iteration cap
// failures surface as numeric errors carrying the residual.
EigPairs top_k_eigs(const SymMatrix& m, int k, double tol = 1e-10);

// Sum of the k largest singular values. k > dim is clamped to dim, so for PSD
// input and k >= dim this is exactly the trace.
double kyfan_norm(const SymMatrix& m, int k);

struct WeightedMoments {
  double total_weight = 0.0;
  Vec mean;                // weighted mean of the points
  Vec center;              // the center the second moment is taken about
  Mat second_moment;       // sum_x w_x (x-center)(x-center)^T, unnormalized
  bool degenerate = false; // total weight numerically zero; mean left at zero
};

// Weighted first/second moments about `center`. Summation is compensated
// (Kahan) in index order, so results do not depend on chunking or threads.
WeightedMoments weighted_moments(const Mat& points, std::span<const double> w,
                                 const Vec& center);

// Convenience: uniform-weight moments of the rows listed in `idx`.
WeightedMoments subset_moments(const Mat& points, std::span<const Index> idx,
                               const Vec& center);

// Largest eigenvalue of the covariance of the listed rows (empirical,
// normalized by count), and its square root. Empty or singleton sets give 0.
double cov_opnorm(const Mat& points, std::span<const Index> idx);
double set_scale(const Mat& points, std::span<const Index> idx);

// Clamp tiny negative eigenvalues of a nearly-PSD matrix: eigenvalues in
// [-1e-9 * lambda_max, 0) are treated as 0 by consumers that need PSD input.
double psd_clamp(double eigenvalue, double lambda_max);

}  // namespace fc::spectral
