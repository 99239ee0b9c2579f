#include "core/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/spectral.hpp"

namespace fc::feasibility {

namespace {

double abs_eps(double mass) { return 1e-12 * std::max(1.0, mass); }

// Top-k eigenpairs of a PSD moment matrix; negative round-off eigenvalues are
// clamped out of the norm and the subgradient.
struct KyfanEval {
  double value = 0.0;
  Mat vectors;  // columns with positive eigenvalues only
};

KyfanEval kyfan_of(const Mat& m, int k) {
  spectral::EigPairs top = spectral::top_k_eigs(spectral::SymMatrix(m), k);
  double lam_max = top.values.size() ? std::max(0.0, top.values[0]) : 0.0;
  KyfanEval ev;
  std::vector<Index> keep;
  for (Index i = 0; i < top.values.size(); ++i)
    if (spectral::psd_clamp(top.values[i], lam_max) > 0.0) keep.push_back(i);
  ev.vectors.resize(m.rows(), static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    ev.value += top.values[keep[i]];
    ev.vectors.col(static_cast<Index>(i)) = top.vectors.col(keep[i]);
  }
  return ev;
}

}  // namespace

int ProgramInstance::effective_k() const {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "alpha must lie in (0,1)");
  int k = kyfan_k > 0 ? kyfan_k : static_cast<int>(std::ceil(1.0 / alpha));
  return k;
}

double ProgramInstance::rhs_coeff() const {
  return rhs_factor * s * s / alpha;
}

double ProgramInstance::mass_floor() const {
  require(points, ErrorCode::invalid_argument, "instance has no points");
  return mass_lb_factor * alpha * static_cast<double>(points->rows());
}

TraceScreen::TraceScreen(const Mat& points, const Vec& mu) {
  const Index n = points.rows();
  sorted_sq_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    sorted_sq_[static_cast<std::size_t>(i)] =
        (points.row(i).transpose() - mu).squaredNorm();
  std::sort(sorted_sq_.begin(), sorted_sq_.end());
  prefix_.resize(sorted_sq_.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted_sq_.size(); ++i)
    prefix_[i + 1] = prefix_[i] + sorted_sq_[i];
}

double TraceScreen::lower_bound(double rhs_coeff, double mass_floor, int k_eff,
                                Index dim) const {
  const double n = static_cast<double>(sorted_sq_.size());
  if (mass_floor > n) return std::numeric_limits<double>::infinity();
  double ratio = static_cast<double>(std::min<Index>(k_eff, dim)) /
                 static_cast<double>(dim);
  // Cost of giving point x weight 1 is ratio*||x-mu||^2 - rhs_coeff; costs are
  // ascending in the sorted order.
  double cut = rhs_coeff / ratio;
  std::size_t negatives = static_cast<std::size_t>(
      std::upper_bound(sorted_sq_.begin(), sorted_sq_.end(), cut) -
      sorted_sq_.begin());
  double lb = ratio * prefix_[negatives] -
              rhs_coeff * static_cast<double>(negatives);
  double have = static_cast<double>(negatives);
  if (have < mass_floor) {
    std::size_t full = static_cast<std::size_t>(std::floor(mass_floor - have));
    full = std::min(full, sorted_sq_.size() - negatives);
    lb += ratio * (prefix_[negatives + full] - prefix_[negatives]) -
          rhs_coeff * static_cast<double>(full);
    double frac = mass_floor - have - static_cast<double>(full);
    if (frac > 0.0 && negatives + full < sorted_sq_.size())
      lb += frac * (ratio * sorted_sq_[negatives + full] - rhs_coeff);
  }
  return lb;
}

FeasibilityResult solve(const ProgramInstance& inst, const SolveParams& params) {
  require(inst.points, ErrorCode::invalid_argument, "instance has no points");
  const Mat& X = *inst.points;
  const Index n = X.rows();
  const Index d = X.cols();
  require(n >= 1, ErrorCode::invalid_argument, "instance has no points");
  require(inst.mu.size() == d, ErrorCode::invalid_argument,
          "mu dimension mismatch");
  require(inst.s >= 0.0 && std::isfinite(inst.s), ErrorCode::invalid_argument,
          "scale must be finite and >= 0");

  const double R = inst.rhs_coeff();
  const double mass_floor = inst.mass_floor();
  const int k_eff = static_cast<int>(std::min<Index>(inst.effective_k(), d));

  FeasibilityResult res;
  if (mass_floor > static_cast<double>(n)) {
    res.status = Status::infeasible;
    res.certified = true;
    res.lower_bound = std::numeric_limits<double>::infinity();
    res.residual = std::numeric_limits<double>::infinity();
    return res;
  }

  const double infeas_margin = params.tau_feas * R * mass_floor;

  TraceScreen screen(X, inst.mu);
  double screen_lb = screen.lower_bound(R, mass_floor, k_eff, d);
  res.lower_bound = screen_lb;
  if (screen_lb > infeas_margin + abs_eps(mass_floor)) {
    res.status = Status::infeasible;
    res.certified = true;
    res.residual = screen_lb / std::max(R * mass_floor, 1.0);
    return res;
  }

  // Shifted rows, reused for gradients and moment assembly.
  Mat shifted = X.rowwise() - inst.mu.transpose();

  auto moment_of = [&](const std::vector<double>& w) {
    Mat m = Mat::Zero(d, d);
    for (Index i = 0; i < n; ++i) {
      double wi = w[static_cast<std::size_t>(i)];
      if (wi == 0.0) continue;
      m.selfadjointView<Eigen::Lower>().rankUpdate(shifted.row(i).transpose(),
                                                   wi);
    }
    return Mat(m.selfadjointView<Eigen::Lower>());
  };
  auto mass_of = [&](const std::vector<double>& w) {
    return std::accumulate(w.begin(), w.end(), 0.0);
  };

  // Start from the better of all-ones and the nearest mass_floor points.
  std::vector<double> w_ones(static_cast<std::size_t>(n), 1.0);
  std::vector<double> w_near(static_cast<std::size_t>(n), 0.0);
  {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return shifted.row(a).squaredNorm() < shifted.row(b).squaredNorm();
    });
    double left = mass_floor;
    for (Index i : order) {
      if (left <= 0.0) break;
      double take = std::min(1.0, left);
      w_near[static_cast<std::size_t>(i)] = take;
      left -= take;
    }
  }

  std::vector<double> w;
  Mat M;
  double mass = 0.0, kyfan = 0.0;
  Mat grad_vectors;
  {
    Mat m_ones = moment_of(w_ones);
    Mat m_near = moment_of(w_near);
    KyfanEval e_ones = kyfan_of(m_ones, k_eff);
    KyfanEval e_near = kyfan_of(m_near, k_eff);
    double phi_ones = e_ones.value - R * static_cast<double>(n);
    double phi_near = e_near.value - R * mass_of(w_near);
    if (phi_ones <= phi_near) {
      w = std::move(w_ones);
      M = std::move(m_ones);
      mass = static_cast<double>(n);
      kyfan = e_ones.value;
      grad_vectors = std::move(e_ones.vectors);
    } else {
      w = std::move(w_near);
      M = std::move(m_near);
      mass = mass_of(w);
      kyfan = e_near.value;
      grad_vectors = std::move(e_near.vectors);
    }
  }

  double best_rel = std::numeric_limits<double>::infinity();
  std::vector<double> g(static_cast<std::size_t>(n));
  std::vector<double> v(static_cast<std::size_t>(n));
  std::vector<Index> order(static_cast<std::size_t>(n));

  for (int t = 0; t < params.max_iters; ++t) {
    res.iterations = t + 1;
    double rel = (kyfan - R * mass) / std::max(R * mass, 1.0);
    best_rel = std::min(best_rel, rel);

    if (kyfan <= R * mass * (1.0 + params.tau_feas) + abs_eps(mass)) {
      res.status = Status::feasible;
      res.w = w;
      res.residual = rel;
      return res;
    }

    // Subgradient c_x = sum_i (u_i . (x-mu))^2 - R; exact on the current w.
    Mat proj = shifted * grad_vectors;  // n x k'
    for (Index i = 0; i < n; ++i)
      g[static_cast<std::size_t>(i)] = proj.row(i).squaredNorm() - R;

    // Exact linear minimization over the truncated box.
    std::fill(v.begin(), v.end(), 0.0);
    double mass_v = 0.0, lin_v = 0.0;
    Index negatives = 0;
    for (Index i = 0; i < n; ++i)
      if (g[static_cast<std::size_t>(i)] < 0.0) {
        v[static_cast<std::size_t>(i)] = 1.0;
        mass_v += 1.0;
        lin_v += g[static_cast<std::size_t>(i)];
        ++negatives;
      }
    if (mass_v < mass_floor) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return g[static_cast<std::size_t>(a)] < g[static_cast<std::size_t>(b)];
      });
      for (Index pos = negatives; pos < n && mass_v < mass_floor; ++pos) {
        Index i = order[static_cast<std::size_t>(pos)];
        if (v[static_cast<std::size_t>(i)] == 1.0) continue;
        double take = std::min(1.0, mass_floor - mass_v);
        v[static_cast<std::size_t>(i)] = take;
        mass_v += take;
        lin_v += take * g[static_cast<std::size_t>(i)];
      }
    }

    // lin_v lower-bounds the optimum (the subgradient plane supports phi).
    res.lower_bound = std::max(res.lower_bound, lin_v);
    if (lin_v > infeas_margin + abs_eps(mass_floor)) {
      res.status = Status::infeasible;
      res.certified = true;
      res.residual = best_rel;
      return res;
    }

    // Convex line search on the blended moment matrix.
    Mat M_v = moment_of(v);
    auto value_at = [&](double gamma) {
      Mat blend = (1.0 - gamma) * M + gamma * M_v;
      double mz = (1.0 - gamma) * mass + gamma * mass_v;
      return kyfan_of(blend, k_eff).value - R * mz;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 18; ++it) {
      double m1 = lo + (hi - lo) / 3.0;
      double m2 = hi - (hi - lo) / 3.0;
      if (value_at(m1) <= value_at(m2))
        hi = m2;
      else
        lo = m1;
    }
    double gamma = 0.5 * (lo + hi);
    double fallback = 2.0 / (t + 2.0);
    if (value_at(fallback) < value_at(gamma)) gamma = fallback;
    if (value_at(1.0) <= value_at(gamma)) gamma = 1.0;
    if (gamma <= 1e-15) gamma = fallback;

    for (Index i = 0; i < n; ++i) {
      std::size_t ii = static_cast<std::size_t>(i);
      w[ii] = (1.0 - gamma) * w[ii] + gamma * v[ii];
    }
    mass = (1.0 - gamma) * mass + gamma * mass_v;
    if ((t + 1) % 32 == 0)
      M = moment_of(w);  // refresh against drift
    else
      M = (1.0 - gamma) * M + gamma * M_v;
    KyfanEval ev = kyfan_of(M, k_eff);
    kyfan = ev.value;
    grad_vectors = std::move(ev.vectors);
  }

  res.status = Status::infeasible;
  res.certified = false;
  res.residual = best_rel;
  return res;
}

SolutionCheck check_solution(const ProgramInstance& inst,
                             std::span<const double> w, double rel_tol) {
  require(inst.points, ErrorCode::invalid_argument, "instance has no points");
  const Mat& X = *inst.points;
  require(static_cast<Index>(w.size()) == X.rows(),
          ErrorCode::invalid_argument, "weight count mismatch");
  for (double wi : w)
    require(wi >= -1e-12 && wi <= 1.0 + 1e-12, ErrorCode::invalid_argument,
            "weights must lie in [0,1]");

  spectral::WeightedMoments mom = spectral::weighted_moments(X, w, inst.mu);
  const int k_eff =
      static_cast<int>(std::min<Index>(inst.effective_k(), X.cols()));
  SolutionCheck chk;
  chk.mass = mom.total_weight;
  chk.kyfan = spectral::kyfan_norm(spectral::SymMatrix(mom.second_moment), k_eff);
  chk.rhs = inst.rhs_coeff() * chk.mass;
  chk.mass_ok = chk.mass >= inst.mass_floor() - abs_eps(inst.mass_floor());
  chk.kyfan_ok = chk.kyfan <= chk.rhs * (1.0 + rel_tol) + abs_eps(chk.mass);
  return chk;
}

}  // namespace fc::feasibility
