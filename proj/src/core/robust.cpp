#include "core/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/rng.hpp"
#include "core/spectral.hpp"

namespace fc::robust {

namespace {

StdevList dedup_sorted(std::vector<double> vals) {
  StdevList out;
  std::sort(vals.begin(), vals.end());
  for (double v : vals) {
    if (!out.values.empty() && v <= out.values.back() * (1.0 + 1e-12)) continue;
    out.values.push_back(v);
  }
  return out;
}

}  // namespace

StdevList candidate_stdevs(const Mat& points) {
  const Index m = points.rows();
  require(m >= 2, ErrorCode::invalid_argument,
          "candidate scales need at least two points");
  double m2 = 2.0 * static_cast<double>(m) * static_cast<double>(m);
  int jmax = static_cast<int>(std::ceil(std::log2(m2)));

  std::vector<double> vals;
  bool any_positive = false;
  for (Index a = 0; a < m; ++a)
    for (Index b = a + 1; b < m; ++b) {
      double dist = (points.row(a) - points.row(b)).norm();
      if (dist <= 0.0) continue;
      any_positive = true;
      for (int j = 0; j <= jmax; ++j)
        vals.push_back(std::sqrt(2.0) * std::exp2(-0.5 * j) * dist);
    }
  if (!any_positive) {
    StdevList out;
    out.degenerate = true;
    return out;
  }
  return dedup_sorted(std::move(vals));
}

StdevList scale_ladder_from_extremes(double d_min, double d_max, Index m) {
  StdevList out;
  if (!(d_max > 0.0)) {
    out.degenerate = true;
    return out;
  }
  if (!(d_min > 0.0)) d_min = d_max;
  double top = std::sqrt(2.0) * d_max;
  double bottom = d_min / (std::sqrt(2.0) * static_cast<double>(std::max<Index>(m, 2)));
  bottom /= std::sqrt(2.0);  // one spare rung below the smallest subset scale
  std::vector<double> vals;
  for (double v = top; v >= bottom; v /= std::sqrt(2.0)) {
    vals.push_back(v);
    if (vals.size() > 4096) break;  // d_max/d_min overflow guard
  }
  return dedup_sorted(std::move(vals));
}

StdevList scale_ladder(const Mat& points) {
  const Index m = points.rows();
  require(m >= 2, ErrorCode::invalid_argument,
          "candidate scales need at least two points");
  double d_min = 0.0, d_max = 0.0;
  for (Index a = 0; a < m; ++a)
    for (Index b = a + 1; b < m; ++b) {
      double dist = (points.row(a) - points.row(b)).norm();
      d_max = std::max(d_max, dist);
      if (dist > 0.0 && (d_min == 0.0 || dist < d_min)) d_min = dist;
    }
  return scale_ladder_from_extremes(d_min, d_max, m);
}

FilterResult filter(const Mat& points, std::span<const Index> subset,
                    const FilterParams& params, std::uint64_t seed) {
  require(params.epsilon >= 0.0 && params.epsilon < 0.5,
          ErrorCode::invalid_argument, "filter epsilon must lie in [0, 0.5)");
  const Index d = points.cols();
  FilterResult out;
  out.kept.assign(subset.begin(), subset.end());
  std::sort(out.kept.begin(), out.kept.end());
  if (out.kept.size() < 2) return out;

  Rng rng(seed);
  const Index cap = static_cast<Index>(
      params.iter_cap_mult * static_cast<double>(subset.size())) + 1;

  for (;; ++out.iterations) {
    require(out.iterations <= cap, ErrorCode::numeric,
            "filter exceeded its iteration cap; top eigenvalue " +
                std::to_string(out.final_top_eigenvalue) + " vs threshold " +
                std::to_string(out.stop_threshold));
    if (out.kept.size() < 2) break;
    const double count = static_cast<double>(out.kept.size());

    Vec mean = Vec::Zero(d);
    for (Index i : out.kept) mean += points.row(i).transpose();
    mean /= count;
    spectral::WeightedMoments mom =
        spectral::subset_moments(points, out.kept, mean);
    spectral::SymMatrix cov(Mat(mom.second_moment / count));
    spectral::EigPairs top = spectral::top_k_eigs(cov, 1);
    double lam = std::max(0.0, top.values[0]);

    // Robust scale: the larger of a per-coordinate estimate (median squared
    // distance to the coordinate-wise median, averaged over coordinates) and
    // the median squared deviation along the top eigenvector.  The second
    // term keeps sets whose spread is concentrated in a few directions from
    // reading as corrupted.
    Vec med(d);
    std::vector<double> coord(out.kept.size());
    for (Index a = 0; a < d; ++a) {
      for (std::size_t i = 0; i < out.kept.size(); ++i)
        coord[i] = points(out.kept[i], a);
      std::nth_element(coord.begin(), coord.begin() + coord.size() / 2,
                       coord.end());
      med[a] = coord[coord.size() / 2];
    }
    std::vector<double> sq(out.kept.size());
    for (std::size_t i = 0; i < out.kept.size(); ++i)
      sq[i] = (points.row(out.kept[i]).transpose() - med).squaredNorm();
    std::nth_element(sq.begin(), sq.begin() + sq.size() / 2, sq.end());
    double scale_sq = sq[sq.size() / 2] / static_cast<double>(d);

    Vec v = top.vectors.col(0);
    std::vector<double> proj(out.kept.size());
    for (std::size_t i = 0; i < out.kept.size(); ++i)
      proj[i] = v.dot(points.row(out.kept[i]).transpose());
    std::vector<double> along = proj;
    std::nth_element(along.begin(), along.begin() + along.size() / 2,
                     along.end());
    const double med_v = along[along.size() / 2];
    for (std::size_t i = 0; i < along.size(); ++i) {
      double dev = proj[i] - med_v;
      along[i] = dev * dev;
    }
    std::nth_element(along.begin(), along.begin() + along.size() / 2,
                     along.end());
    scale_sq = std::max(scale_sq, along[along.size() / 2]);

    out.final_top_eigenvalue = lam;
    out.stop_threshold = params.stop_mult * scale_sq;
    if (lam <= out.stop_threshold) break;

    const double proj_mean = v.dot(mean);
    std::vector<double> score(out.kept.size());
    double tau_max = 0.0;
    for (std::size_t i = 0; i < out.kept.size(); ++i) {
      double dev = proj[i] - proj_mean;
      score[i] = dev * dev;
      tau_max = std::max(tau_max, score[i]);
    }
    if (tau_max <= 0.0) break;

    IndexVec next;
    next.reserve(out.kept.size());
    for (std::size_t i = 0; i < out.kept.size(); ++i) {
      double u = rng.uniform();
      if (u < score[i] / tau_max) continue;  // removed
      next.push_back(out.kept[i]);
    }
    out.kept = std::move(next);
  }
  return out;
}

PairDistances::PairDistances(const Mat& points) {
  const Index n = points.rows();
  sorted_.resize(static_cast<std::size_t>(n));
  min_positive_ = 0.0;
  max_ = 0.0;
  for (Index i = 0; i < n; ++i) {
    std::vector<double>& row = sorted_[static_cast<std::size_t>(i)];
    row.resize(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
      row[static_cast<std::size_t>(j)] =
          (points.row(i) - points.row(j)).squaredNorm();
    std::sort(row.begin(), row.end());
    for (double sq : row) {
      if (sq > 0.0) {
        double dist = std::sqrt(sq);
        if (min_positive_ == 0.0 || dist < min_positive_) min_positive_ = dist;
        break;
      }
    }
    if (!row.empty()) max_ = std::max(max_, std::sqrt(row.back()));
  }
}

Index PairDistances::count_within(Index row, double radius) const {
  if (radius < 0.0) return 0;
  const std::vector<double>& r = sorted_[static_cast<std::size_t>(row)];
  double rsq = radius * radius;
  return static_cast<Index>(
      std::upper_bound(r.begin(), r.end(), rsq) - r.begin());
}

std::vector<Candidate> list_decode_means(const Mat& points,
                                         const PairDistances& dists,
                                         double s, double alpha,
                                         const DecoderParams& params) {
  const Index n = points.rows();
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "alpha must lie in (0,1)");
  require(s >= 0.0, ErrorCode::invalid_argument, "scale must be >= 0");
  double r = params.radius_factor * params.c_ld * s / std::sqrt(alpha);
  double min_count = params.count_factor * alpha * static_cast<double>(n);
  Index cap = static_cast<Index>(std::floor(2.0 / alpha));

  std::vector<std::pair<Index, Index>> dense;  // (count, index)
  for (Index i = 0; i < n; ++i) {
    Index c = dists.count_within(i, r);
    if (static_cast<double>(c) >= min_count) dense.push_back({c, i});
  }
  std::sort(dense.begin(), dense.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  std::vector<Candidate> out;
  for (const auto& [count, idx] : dense) {
    if (static_cast<Index>(out.size()) >= cap) break;
    bool close = false;
    for (const Candidate& c : out)
      if ((points.row(idx).transpose() - c.mean).norm() <= r) {
        close = true;
        break;
      }
    if (close) continue;
    Candidate c;
    c.mean = points.row(idx).transpose();
    c.origin_point = idx;
    c.count = count;
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

struct RemovalEval {
  double mean_shift = 0.0;
  double cov_ratio = 0.0;
};

// Evaluate Def-style clauses for the removal of `removed` (indices into the
// subset array). Sums are maintained by subtraction from precomputed totals.
RemovalEval eval_removal(const Mat& points, std::span<const Index> subset,
                         const std::vector<Index>& removed, const Vec& mu,
                         double sigma, double eps, const Vec& total_sum,
                         const Mat& total_mom) {
  const double m = static_cast<double>(subset.size());
  Vec sum = total_sum;
  Mat mom = total_mom;
  for (Index pos : removed) {
    Vec x = points.row(subset[static_cast<std::size_t>(pos)]).transpose();
    sum -= x;
    Vec dxm = x - mu;
    mom -= dxm * dxm.transpose();
  }
  double mass = m - static_cast<double>(removed.size());
  RemovalEval ev;
  if (mass <= 0.0) return ev;
  Vec wmean = sum / mass;
  double shift = (wmean - mu).norm();
  double lam = std::max(
      0.0, spectral::top_k_eigs(spectral::SymMatrix(Mat(mom / mass)), 1).values[0]);

  double denom1 = sigma * std::sqrt(std::max(eps, 1e-300));
  ev.mean_shift = sigma > 0.0 ? shift / denom1
                              : (shift > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
  ev.cov_ratio = sigma > 0.0
                     ? lam / (sigma * sigma)
                     : (lam > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
  return ev;
}

void enumerate_removals(Index m, Index r, std::vector<Index>& cur, Index start,
                        const std::function<void(const std::vector<Index>&)>& fn) {
  if (static_cast<Index>(cur.size()) == r) {
    fn(cur);
    return;
  }
  for (Index i = start; i < m; ++i) {
    cur.push_back(i);
    enumerate_removals(m, r, cur, i + 1, fn);
    cur.pop_back();
  }
}

}  // namespace

StabilityReport stability_certificate(const Mat& points,
                                      std::span<const Index> subset,
                                      const Vec& mu, double sigma, double eps,
                                      Index trials, std::uint64_t seed) {
  const Index m = static_cast<Index>(subset.size());
  require(m >= 1, ErrorCode::invalid_argument, "empty set");
  require(eps >= 0.0 && eps < 1.0, ErrorCode::invalid_argument,
          "eps must lie in [0,1)");
  const Index d = points.cols();
  const Index max_remove = static_cast<Index>(std::floor(
      eps * static_cast<double>(m) + 1e-12));

  Vec total_sum = Vec::Zero(d);
  Mat total_mom = Mat::Zero(d, d);
  for (Index i : subset) {
    Vec x = points.row(i).transpose();
    total_sum += x;
    Vec dv = x - mu;
    total_mom += dv * dv.transpose();
  }

  StabilityReport rep;
  auto consider = [&](const std::vector<Index>& removed) {
    RemovalEval ev = eval_removal(points, subset, removed, mu, sigma, eps,
                                  total_sum, total_mom);
    rep.worst_mean_shift = std::max(rep.worst_mean_shift, ev.mean_shift);
    rep.worst_cov_ratio = std::max(rep.worst_cov_ratio, ev.cov_ratio);
    rep.removals_checked += 1;
  };

  if (m <= 18) {
    rep.exhaustive = true;
    std::vector<Index> cur;
    for (Index r = 0; r <= max_remove; ++r)
      enumerate_removals(m, r, cur, 0, consider);
  } else {
    consider({});  // no removal
    // Greedy adversarial removals: extremes along the top covariance
    // direction (both signs) shift the mean; the closest points to mu push
    // the normalized second moment up.
    Vec mean = total_sum / static_cast<double>(m);
    Mat cov = Mat::Zero(d, d);
    for (Index i : subset) {
      Vec dv = points.row(i).transpose() - mean;
      cov += dv * dv.transpose();
    }
    cov /= static_cast<double>(m);
    Vec v = spectral::top_k_eigs(spectral::SymMatrix(cov), 1).vectors.col(0);

    auto greedy = [&](auto key) {
      std::vector<std::pair<double, Index>> order;
      for (Index pos = 0; pos < m; ++pos)
        order.push_back({key(points.row(subset[static_cast<std::size_t>(pos)])
                                 .transpose()),
                         pos});
      std::sort(order.begin(), order.end());
      std::vector<Index> removed;
      for (Index r = 1; r <= max_remove; ++r) {
        removed.push_back(order[static_cast<std::size_t>(r - 1)].second);
        consider(removed);
      }
    };
    greedy([&](const Vec& x) { return -v.dot(x - mu); });  // drop +v extremes
    greedy([&](const Vec& x) { return v.dot(x - mu); });   // drop -v extremes
    greedy([&](const Vec& x) { return (x - mu).norm(); }); // drop central mass

    if (max_remove > 0) {
      Rng rng(seed);
      std::vector<Index> pool(static_cast<std::size_t>(m));
      for (Index i = 0; i < m; ++i) pool[static_cast<std::size_t>(i)] = i;
      for (Index t = 0; t < trials; ++t) {
        for (Index i = 0; i < max_remove; ++i) {
          std::size_t j = static_cast<std::size_t>(i) +
                          static_cast<std::size_t>(
                              rng.below(static_cast<std::uint64_t>(m - i)));
          std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        std::vector<Index> removed(pool.begin(), pool.begin() + max_remove);
        consider(removed);
      }
    }
  }

  rep.c_est = std::max(rep.worst_mean_shift, std::sqrt(rep.worst_cov_ratio));
  return rep;
}

}  // namespace fc::robust
