#include "core/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace fc::spectral {

namespace {

constexpr Index kDenseLimit = 64;

// Kahan-compensated accumulator.
struct Comp {
  double sum = 0.0;
  double c = 0.0;
  void add(double v) {
    double y = v - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

Vec dense_eigs_all(const Mat& m, Mat* vectors) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  require(es.info() == Eigen::Success, ErrorCode::numeric,
          "dense eigendecomposition failed");
  // Eigen returns ascending; flip to descending.
  Index d = m.rows();
  Vec vals(d);
  if (vectors) vectors->resize(d, d);
  for (Index i = 0; i < d; ++i) {
    vals[i] = es.eigenvalues()[d - 1 - i];
    if (vectors) vectors->col(i) = es.eigenvectors().col(d - 1 - i);
  }
  return vals;
}

// Lanczos with full reorthogonalization for the k largest algebraic
// eigenpairs of a symmetric operator given as y = A(x). `scale` is a lower
// estimate of the operator norm used for the convergence bars. Deterministic
// start vector; restarts with a perturbed start if the Krylov space
// degenerates.
EigPairs lanczos_top_k(const std::function<Vec(const Vec&)>& apply, Index d,
                       double scale, int k, double tol) {
  const int max_dim = static_cast<int>(std::min<Index>(d, std::max(4 * k + 20, 60)));
  const int max_restarts = 8;

  for (int restart = 0; restart < max_restarts; ++restart) {
    Mat V(d, max_dim);
    std::vector<double> alpha, beta;

    Vec v = Vec::Ones(d);
    for (Index i = 0; i < d; ++i)
      v[i] += 0.5 * std::sin(double(i + 1) * (1.7 + restart));
    v.normalize();
    V.col(0) = v;

    int built = 0;
    for (int j = 0; j < max_dim; ++j) {
      Vec w = apply(V.col(j));
      double a = V.col(j).dot(w);
      alpha.push_back(a);
      w -= a * V.col(j);
      if (j > 0) w -= beta[j - 1] * V.col(j - 1);
      // Full reorthogonalization, twice.
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) w -= V.col(i).dot(w) * V.col(i);
      built = j + 1;
      double b = w.norm();
      if (j + 1 == max_dim) break;
      if (b <= 1e-14 * scale) break;  // invariant subspace found
      beta.push_back(b);
      V.col(j + 1) = w / b;
    }

    // Solve the tridiagonal Rayleigh-Ritz problem densely.
    Mat T = Mat::Zero(built, built);
    for (int i = 0; i < built; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < built) {
        T(i, i + 1) = beta[i];
        T(i + 1, i) = beta[i];
      }
    }
    Mat tv;
    Vec tw = dense_eigs_all(T, &tv);

    int kk = std::min<int>(k, built);
    EigPairs out;
    out.values = tw.head(kk);
    out.vectors = V.leftCols(built) * tv.leftCols(kk);

    // Accept when residuals are small or the whole space was captured.
    double worst = 0.0;
    for (int i = 0; i < kk; ++i) {
      Vec r = apply(out.vectors.col(i)) - out.values[i] * out.vectors.col(i);
      worst = std::max(worst, r.norm());
    }
    if (built == d || worst <= tol * scale * 10.0 || kk < k) {
      if (kk < k && built < d) continue;  // degenerate space; retry perturbed
      return out;
    }
    if (restart + 1 == max_restarts)
      fail(ErrorCode::numeric,
           "eigensolver did not converge; residual " + std::to_string(worst));
  }
  fail(ErrorCode::numeric, "eigensolver did not converge");
}

EigPairs lanczos_top_k(const Mat& m, int k, double tol) {
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  auto apply = [&m](const Vec& x) {
    return Vec(m.selfadjointView<Eigen::Lower>() * x);
  };
  return lanczos_top_k(apply, m.rows(), scale, k, tol);
}

}  // namespace

SymMatrix::SymMatrix(Mat m) {
  require(m.rows() == m.cols(), ErrorCode::invalid_argument,
          "symmetric matrix must be square");
  require(m.allFinite(), ErrorCode::invalid_argument,
          "symmetric matrix has non-finite entries");
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12 * scale, ErrorCode::invalid_argument,
          "matrix is not symmetric within tolerance");
  m_ = 0.5 * (m + m.transpose());
}

EigPairs top_k_eigs(const SymMatrix& m, int k, double tol) {
  require(k >= 1, ErrorCode::invalid_argument, "k must be >= 1");
  Index d = m.dim();
  int kk = static_cast<int>(std::min<Index>(k, d));
  if (d <= kDenseLimit || kk == d) {
    Mat vecs;
    Vec vals = dense_eigs_all(m.mat(), &vecs);
    EigPairs out;
    out.values = vals.head(kk);
    out.vectors = vecs.leftCols(kk);
    return out;
  }
  return lanczos_top_k(m.mat(), kk, tol);
}

double kyfan_norm(const SymMatrix& m, int k) {
  require(k >= 1, ErrorCode::invalid_argument, "k must be >= 1");
  Index d = m.dim();
  int kk = static_cast<int>(std::min<Index>(k, d));
  if (d <= kDenseLimit) {
    Vec vals = dense_eigs_all(m.mat(), nullptr);
    std::vector<double> mags(d);
    for (Index i = 0; i < d; ++i) mags[i] = std::abs(vals[i]);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    Comp s;
    for (int i = 0; i < kk; ++i) s.add(mags[i]);
    return s.sum;
  }
  // Iterative path: the k largest |eigenvalues| of m are the square roots of
  // the k largest eigenvalues of m^2, applied as an operator so the squared
  // matrix is never formed. The top of m^2's spectrum is exactly the sought
  // magnitudes, so the slowly-converging low end is never touched.
  const Mat& mm = m.mat();
  auto apply = [&mm](const Vec& x) {
    Vec t = mm.selfadjointView<Eigen::Lower>() * x;
    return Vec(mm.selfadjointView<Eigen::Lower>() * t);
  };
  double scale = std::max(1.0, mm.cwiseAbs().maxCoeff());
  EigPairs top = lanczos_top_k(apply, d, scale * scale, kk, 1e-10);
  Comp s;
  for (Index i = 0; i < top.values.size(); ++i)
    s.add(std::sqrt(std::max(0.0, top.values[i])));
  return s.sum;
}

WeightedMoments weighted_moments(const Mat& points, std::span<const double> w,
                                 const Vec& center) {
  const Index n = points.rows();
  const Index d = points.cols();
  require(static_cast<Index>(w.size()) == n, ErrorCode::invalid_argument,
          "weight count does not match point count");
  require(center.size() == d, ErrorCode::invalid_argument,
          "center dimension does not match points");
  for (double wi : w)
    require(std::isfinite(wi) && wi >= 0.0, ErrorCode::invalid_argument,
            "weights must be finite and non-negative");

  WeightedMoments out;
  out.center = center;

  Comp total;
  std::vector<Comp> mean_acc(d);
  std::vector<Comp> mom_acc(static_cast<std::size_t>(d) * d);

  Vec diff(d);
  for (Index i = 0; i < n; ++i) {
    double wi = w[static_cast<std::size_t>(i)];
    if (wi == 0.0) continue;
    total.add(wi);
    diff = points.row(i).transpose() - center;
    for (Index a = 0; a < d; ++a) {
      mean_acc[a].add(wi * points(i, a));
      double da = wi * diff[a];
      for (Index b = a; b < d; ++b)
        mom_acc[static_cast<std::size_t>(a) * d + b].add(da * diff[b]);
    }
  }

  out.total_weight = total.sum;
  out.mean = Vec::Zero(d);
  out.second_moment = Mat::Zero(d, d);
  for (Index a = 0; a < d; ++a)
    for (Index b = a; b < d; ++b) {
      double v = mom_acc[static_cast<std::size_t>(a) * d + b].sum;
      out.second_moment(a, b) = v;
      out.second_moment(b, a) = v;
    }
  if (out.total_weight > 0.0) {
    for (Index a = 0; a < d; ++a) out.mean[a] = mean_acc[a].sum / out.total_weight;
  } else {
    out.degenerate = true;
  }
  return out;
}

WeightedMoments subset_moments(const Mat& points, std::span<const Index> idx,
                               const Vec& center) {
  std::vector<double> w(static_cast<std::size_t>(points.rows()), 0.0);
  for (Index i : idx) {
    require(i >= 0 && i < points.rows(), ErrorCode::invalid_argument,
            "subset index out of range");
    w[static_cast<std::size_t>(i)] = 1.0;
  }
  return weighted_moments(points, w, center);
}

double cov_opnorm(const Mat& points, std::span<const Index> idx) {
  if (idx.size() < 2) return 0.0;
  const Index d = points.cols();
  Vec mean = Vec::Zero(d);
  for (Index i : idx) mean += points.row(i).transpose();
  mean /= static_cast<double>(idx.size());
  WeightedMoments m = subset_moments(points, idx, mean);
  SymMatrix cov(Mat(m.second_moment / m.total_weight));
  EigPairs top = top_k_eigs(cov, 1);
  return std::max(0.0, top.values[0]);
}

double set_scale(const Mat& points, std::span<const Index> idx) {
  return std::sqrt(cov_opnorm(points, idx));
}

double psd_clamp(double eigenvalue, double lambda_max) {
  if (eigenvalue < 0.0 && eigenvalue >= -1e-9 * std::max(lambda_max, 0.0))
    return 0.0;
  return eigenvalue;
}

}  // namespace fc::spectral
