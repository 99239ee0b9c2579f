#include "core/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/rng.hpp"
#include "core/spectral.hpp"

namespace fc::verify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_finite(double v) {
  if (std::isnan(v)) return 0.0;
  return std::clamp(v, -1e300, 1e300);
}

// Overlap counts between output sets and true clusters; outlier labels (-1)
// contribute to |B_j| only.
std::vector<std::vector<Index>> overlap_counts(
    const pipeline::ClusterOutput& out, const GroundTruth& truth) {
  const Index k = truth.k();
  std::vector<std::vector<Index>> counts(
      out.sets.size(), std::vector<Index>(static_cast<std::size_t>(k), 0));
  for (std::size_t j = 0; j < out.sets.size(); ++j)
    for (Index idx : out.sets[j].indices) {
      std::int32_t lab = truth.labels[static_cast<std::size_t>(idx)];
      if (lab >= 0) ++counts[j][static_cast<std::size_t>(lab)];
    }
  return counts;
}

std::vector<Index> match_sets(const std::vector<std::vector<Index>>& counts,
                              Index k) {
  std::vector<Index> match(counts.size(), 0);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    Index best = 0;
    for (Index i = 1; i < k; ++i)
      if (counts[j][static_cast<std::size_t>(i)] >
          counts[j][static_cast<std::size_t>(best)])
        best = i;
    match[j] = best;
  }
  return match;
}

}  // namespace

RefinementReport verify_refinement(const pipeline::ClusterOutput& out,
                                   const GroundTruth& truth, double alpha,
                                   double c_const, double pairwise_factor) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "alpha must lie in (0,1)");
  RefinementReport r;
  r.m = static_cast<Index>(out.sets.size());
  r.k = truth.k();
  r.n = truth.n();
  r.alpha = alpha;
  r.c_const = c_const;
  r.pairwise_factor = pairwise_factor;
  r.H.assign(static_cast<std::size_t>(r.k), {});
  r.size_floor = 0.92 * alpha * static_cast<double>(r.n);
  r.spurious_cap = 0.03 * alpha * static_cast<double>(r.n);
  if (out.sets.empty()) return r;  // all clauses stay failed
  require(out.assignments.empty() ||
              static_cast<Index>(out.assignments.size()) == r.n,
          ErrorCode::invalid_argument,
          "output and truth cover different point universes");

  std::vector<std::vector<Index>> counts = overlap_counts(out, truth);
  std::vector<Index> match = match_sets(counts, r.k);
  for (std::size_t j = 0; j < out.sets.size(); ++j)
    r.H[static_cast<std::size_t>(match[j])].push_back(static_cast<Index>(j));

  r.min_set_size = std::numeric_limits<Index>::max();
  Index covered = 0;
  for (const pipeline::ClusterSet& set : out.sets) {
    r.min_set_size =
        std::min(r.min_set_size, static_cast<Index>(set.indices.size()));
    covered += static_cast<Index>(set.indices.size());
  }
  r.size_ok = static_cast<double>(r.min_set_size) >= r.size_floor - 1e-9;

  r.worst_missed_frac = 0.0;
  r.worst_spurious = 0.0;
  for (Index i = 0; i < r.k; ++i) {
    Index si = static_cast<Index>(truth.members(static_cast<std::int32_t>(i)).size());
    Index hit = 0, absorbed = 0;
    for (Index j : r.H[static_cast<std::size_t>(i)]) {
      hit += counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      absorbed += static_cast<Index>(
                      out.sets[static_cast<std::size_t>(j)].indices.size()) -
                  counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
    if (si > 0)
      r.worst_missed_frac =
          std::max(r.worst_missed_frac,
                   static_cast<double>(si - hit) / static_cast<double>(si));
    r.worst_spurious = std::max(r.worst_spurious, static_cast<double>(absorbed));
  }
  r.missed_ok = r.worst_missed_frac <= 0.045 + 1e-12;
  r.spurious_ok = r.worst_spurious <= r.spurious_cap + 1e-9;

  r.worst_mean_ratio = 0.0;
  bool mean_fail = false;
  for (Index i = 0; i < r.k; ++i) {
    double sigma_i = truth.sigmas[static_cast<std::size_t>(i)];
    Index si = static_cast<Index>(truth.members(static_cast<std::int32_t>(i)).size());
    Vec mu_i = truth.means.row(i).transpose();
    for (Index j : r.H[static_cast<std::size_t>(i)]) {
      const pipeline::ClusterSet& set = out.sets[static_cast<std::size_t>(j)];
      if (set.indices.empty()) continue;  // already fails the size clause
      double num = (set.center - mu_i).norm();
      double allowed = c_const * sigma_i *
                       std::sqrt(static_cast<double>(si) /
                                 static_cast<double>(set.indices.size()));
      if (allowed > 0.0) {
        r.worst_mean_ratio = std::max(r.worst_mean_ratio, num / allowed);
      } else if (num > 1e-9 * (1.0 + mu_i.norm())) {
        r.worst_mean_ratio = kInf;
        mean_fail = true;
      }
    }
  }
  r.mean_ok = !mean_fail && r.worst_mean_ratio <= 1.0 + 1e-12;

  r.worst_pair_ratio = kInf;
  const double root_alpha = std::sqrt(alpha);
  for (std::size_t j = 0; j < out.sets.size(); ++j) {
    if (out.sets[j].indices.empty()) continue;
    for (std::size_t j2 = j + 1; j2 < out.sets.size(); ++j2) {
      if (out.sets[j2].indices.empty()) continue;
      double num = (out.sets[j].center - out.sets[j2].center).norm();
      double req = pairwise_factor *
                   (out.sets[j].scale + out.sets[j2].scale) / root_alpha;
      double ratio = req > 0.0 ? num / req : (num > 0.0 ? kInf : 0.0);
      r.worst_pair_ratio = std::min(r.worst_pair_ratio, ratio);
    }
  }
  r.separation_ok = r.worst_pair_ratio > 1.0;

  r.coverage_frac = static_cast<double>(covered) / static_cast<double>(r.n);
  r.coverage_ok = r.coverage_frac >= 0.95 - 1e-12;

  r.min_purity = 1.0;
  for (std::size_t j = 0; j < out.sets.size(); ++j) {
    if (out.sets[j].indices.empty()) {
      r.min_purity = 0.0;
      continue;
    }
    Index top = *std::max_element(counts[j].begin(), counts[j].end());
    r.min_purity = std::min(r.min_purity,
                            static_cast<double>(top) /
                                static_cast<double>(out.sets[j].indices.size()));
  }
  r.purity_ok = r.min_purity > 0.96;

  r.count_ok = r.m >= r.k &&
               static_cast<double>(r.m) <= 1.07 / alpha + 1e-9;

  r.pass = r.size_ok && r.missed_ok && r.spurious_ok && r.mean_ok &&
           r.separation_ok && r.coverage_ok && r.purity_ok && r.count_ok;
  return r;
}

namespace {

const char* pf(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace

std::string RefinementReport::text() const {
  std::ostringstream os;
  os.precision(6);
  os << "refinement m=" << m << " k=" << k << " n=" << n
     << " alpha=" << alpha << " c=" << c_const
     << " pair_factor=" << pairwise_factor << "\n";
  os << "sizes        " << pf(size_ok) << "  min |B_j| = " << min_set_size
     << " vs floor " << size_floor << "\n";
  os << "missed mass  " << pf(missed_ok)
     << "  worst |S_i\\B_i|/|S_i| = " << worst_missed_frac << " vs 0.045\n";
  os << "spurious     " << pf(spurious_ok)
     << "  worst |B_i\\S_i| = " << worst_spurious << " vs " << spurious_cap
     << "\n";
  os << "mean error   " << pf(mean_ok)
     << "  worst ratio = " << clamp_finite(worst_mean_ratio) << " vs 1\n";
  os << "separation   " << pf(separation_ok)
     << "  worst pair ratio = " << clamp_finite(worst_pair_ratio)
     << " vs > 1\n";
  os << "coverage     " << pf(coverage_ok) << "  " << coverage_frac
     << " vs 0.95\n";
  os << "purity       " << pf(purity_ok) << "  min " << min_purity
     << " vs > 0.96\n";
  os << "set count    " << pf(count_ok) << "  k=" << k << " <= m=" << m
     << " <= " << 1.07 / alpha << "\n";
  os << "overall      " << pf(pass) << "\n";
  return os.str();
}

std::string RefinementReport::json() const {
  nlohmann::json j;
  j["m"] = m;
  j["k"] = k;
  j["n"] = n;
  j["alpha"] = alpha;
  j["c_const"] = c_const;
  j["pairwise_factor"] = pairwise_factor;
  j["size_ok"] = size_ok;
  j["min_set_size"] = min_set_size;
  j["size_floor"] = size_floor;
  nlohmann::json hj = nlohmann::json::array();
  for (const IndexVec& hi : H) hj.push_back(hi);
  j["H"] = hj;
  j["missed_ok"] = missed_ok;
  j["worst_missed_frac"] = worst_missed_frac;
  j["spurious_ok"] = spurious_ok;
  j["worst_spurious"] = worst_spurious;
  j["spurious_cap"] = spurious_cap;
  j["mean_ok"] = mean_ok;
  j["worst_mean_ratio"] = clamp_finite(worst_mean_ratio);
  j["separation_ok"] = separation_ok;
  j["worst_pair_ratio"] = clamp_finite(worst_pair_ratio);
  j["coverage_ok"] = coverage_ok;
  j["coverage_frac"] = coverage_frac;
  j["purity_ok"] = purity_ok;
  j["min_purity"] = min_purity;
  j["count_ok"] = count_ok;
  j["pass"] = pass;
  return j.dump(2) + "\n";
}

namespace {

double subset_sigma(const Mat& points, std::span<const Index> idx) {
  return spectral::set_scale(points, idx);
}

}  // namespace

NlscResult nlsc_spotcheck(const Mat& points, std::span<const Index> S,
                          double alpha, Index n_total, int trials,
                          std::uint64_t seed, NlscMode mode) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "alpha must lie in (0,1)");
  require(n_total >= 1, ErrorCode::invalid_argument, "n_total must be >= 1");
  NlscResult res;
  const Index sz = static_cast<Index>(S.size());
  const double q_real = 0.8 * alpha * static_cast<double>(n_total);
  const Index q = std::max<Index>(
      static_cast<Index>(std::ceil(q_real - 1e-9)), 1);
  if (q > sz) {
    res.vacuous = true;
    res.pass = true;
    res.worst_ratio = 1.0;
    return res;
  }
  const double sigma_s = subset_sigma(points, S);

  auto ratio_of = [&](std::span<const Index> sub) {
    double sp = subset_sigma(points, sub);
    if (sigma_s <= 0.0) return 1.0;  // all subsets of a point mass collapse too
    return sp / sigma_s;
  };
  res.worst_ratio = 1.0;  // the full set itself
  res.subsets_examined = 1;
  auto consider = [&](std::span<const Index> sub) {
    res.worst_ratio = std::min(res.worst_ratio, ratio_of(sub));
    ++res.subsets_examined;
  };

  if (mode == NlscMode::exhaustive) {
    require(sz <= 18, ErrorCode::invalid_argument,
            "exhaustive mode is limited to 18 points");
    IndexVec sub;
    sub.reserve(static_cast<std::size_t>(sz));
    const std::uint32_t full = (1u << sz) - 1u;
    for (std::uint32_t mask = 1; mask < full; ++mask) {
      if (std::popcount(mask) < q) continue;
      sub.clear();
      for (Index b = 0; b < sz; ++b)
        if (mask & (1u << b)) sub.push_back(S[static_cast<std::size_t>(b)]);
      consider(sub);
    }
    res.pass = res.worst_ratio >= 0.1 - 1e-12;
    return res;
  }

  // Deliberate low-variance probes: windows in sorted order along the top
  // principal direction and by distance from the mean.
  if (sigma_s > 0.0 && sz >= 2) {
    Vec center = Vec::Zero(points.cols());
    for (Index i : S) center += points.row(i).transpose();
    center /= static_cast<double>(sz);
    spectral::WeightedMoments mom =
        spectral::subset_moments(points, S, center);
    Mat cov = mom.second_moment / static_cast<double>(S.size());
    spectral::EigPairs eig = spectral::top_k_eigs(spectral::SymMatrix(cov), 1);
    Vec v = eig.vectors.col(0);
    auto windows_by = [&](auto key) {
      IndexVec order(S.begin(), S.end());
      std::stable_sort(order.begin(), order.end(),
                       [&](Index a, Index b) { return key(a) < key(b); });
      Index span_len = sz - q;
      Index stride = std::max<Index>(1, span_len / 64);
      IndexVec sub(static_cast<std::size_t>(q));
      for (Index start = 0; start <= span_len;
           start = start == span_len ? span_len + 1
                                     : std::min(start + stride, span_len)) {
        std::copy(order.begin() + start, order.begin() + start + q,
                  sub.begin());
        consider(sub);
      }
    };
    windows_by([&](Index a) {
      return v.dot(points.row(a).transpose() - mom.mean);
    });
    windows_by([&](Index a) {
      return (points.row(a).transpose() - mom.mean).norm();
    });
  }

  IndexVec pool(S.begin(), S.end());
  IndexVec sub(static_cast<std::size_t>(q));
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, 0x1BC5, static_cast<std::uint64_t>(t)));
    for (Index i = 0; i < q; ++i) {
      Index j = i + static_cast<Index>(rng.below(
                        static_cast<std::uint64_t>(sz - i)));
      std::swap(pool[static_cast<std::size_t>(i)],
                pool[static_cast<std::size_t>(j)]);
      sub[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
    consider(sub);
  }
  res.pass = res.worst_ratio >= 0.1 - 1e-12;
  return res;
}

MetricsTable clustering_metrics(const pipeline::ClusterOutput& out,
                                const GroundTruth& truth) {
  MetricsTable t;
  const Index k = truth.k();
  const Index n = truth.n();
  const Index m = static_cast<Index>(out.sets.size());
  std::vector<std::vector<Index>> counts = overlap_counts(out, truth);
  std::vector<Index> match = match_sets(counts, k);

  Index covered = 0;
  for (const pipeline::ClusterSet& set : out.sets)
    covered += static_cast<Index>(set.indices.size());

  t.rows.push_back({"m", -1, -1, static_cast<double>(m)});
  t.rows.push_back({"k", -1, -1, static_cast<double>(k)});
  t.rows.push_back({"n", -1, -1, static_cast<double>(n)});
  t.rows.push_back({"coverage_frac", -1, -1,
                    static_cast<double>(covered) / static_cast<double>(n)});

  for (Index i = 0; i < k; ++i) {
    Index si = static_cast<Index>(truth.members(static_cast<std::int32_t>(i)).size());
    Index hit = 0, absorbed = 0;
    for (std::size_t j = 0; j < out.sets.size(); ++j) {
      if (match[j] != i) continue;
      hit += counts[j][static_cast<std::size_t>(i)];
      absorbed += static_cast<Index>(out.sets[j].indices.size()) -
                  counts[j][static_cast<std::size_t>(i)];
    }
    t.rows.push_back({"true_size", i, -1, static_cast<double>(si)});
    t.rows.push_back({"missed_frac", i, -1,
                      si > 0 ? static_cast<double>(si - hit) /
                                   static_cast<double>(si)
                             : 0.0});
    t.rows.push_back({"spurious_count", i, -1, static_cast<double>(absorbed)});
  }

  for (std::size_t j = 0; j < out.sets.size(); ++j) {
    const pipeline::ClusterSet& set = out.sets[j];
    Index jj = static_cast<Index>(j);
    t.rows.push_back({"set_size", -1, jj,
                      static_cast<double>(set.indices.size())});
    t.rows.push_back({"match", -1, jj, static_cast<double>(match[j])});
    double purity = 0.0;
    if (!set.indices.empty())
      purity = static_cast<double>(
                   *std::max_element(counts[j].begin(), counts[j].end())) /
               static_cast<double>(set.indices.size());
    t.rows.push_back({"purity", -1, jj, purity});
    double sigma_i = truth.sigmas[static_cast<std::size_t>(match[j])];
    Vec mu_i = truth.means.row(static_cast<Index>(match[j])).transpose();
    double err = set.indices.empty() ? 0.0 : (set.center - mu_i).norm();
    double norm_err;
    if (sigma_i > 0.0)
      norm_err = err / sigma_i;
    else
      norm_err = err > 1e-9 * (1.0 + mu_i.norm()) ? 1e300 : 0.0;
    t.rows.push_back({"mean_err_norm", -1, jj, norm_err});
    t.rows.push_back({"set_scale", -1, jj, set.scale});
  }
  return t;
}

std::string MetricsTable::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "metric,i,j,value\n";
  for (const MetricRow& r : rows) {
    os << r.metric << ",";
    if (r.i >= 0) os << r.i;
    os << ",";
    if (r.j >= 0) os << r.j;
    os << "," << r.value << "\n";
  }
  return os.str();
}

}  // namespace fc::verify
