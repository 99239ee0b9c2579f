#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/feasibility.hpp"
#include "core/rng.hpp"
#include "core/spectral.hpp"

namespace fc::pipeline {

ConstantsProfile ConstantsProfile::paper() {
  ConstantsProfile p;
  p.name = "paper";
  p.C = 2.0;
  p.c_ld = 2.0;
  p.dedup_factor = 99.0 * p.C;
  p.mass_lb_factor = 0.97;
  p.rhs_factor = 2.0 * p.C * p.C;
  p.size_prune_factor = 0.96;
  p.distance_prune_factor = 4761.0 * p.C;
  p.filter_epsilon = 0.04;
  return p;
}

ConstantsProfile ConstantsProfile::practical() {
  ConstantsProfile p;
  p.name = "practical";
  p.C = 1.0;
  p.c_ld = 2.0;
  p.dedup_factor = 6.0;
  p.mass_lb_factor = 0.97;
  p.rhs_factor = 4.0;
  p.size_prune_factor = 0.96;
  p.distance_prune_factor = 8.0;
  p.filter_epsilon = 0.04;
  return p;
}

ConstantsProfile ConstantsProfile::by_name(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "practical") return practical();
  fail(ErrorCode::invalid_argument, "unknown profile: " + name);
}

void ConstantsProfile::set(const std::string& key, double value) {
  if (key == "C") C = value;
  else if (key == "c_ld") c_ld = value;
  else if (key == "dedup_factor") dedup_factor = value;
  else if (key == "mass_lb_factor") mass_lb_factor = value;
  else if (key == "rhs_factor") rhs_factor = value;
  else if (key == "size_prune_factor") size_prune_factor = value;
  else if (key == "distance_prune_factor") distance_prune_factor = value;
  else if (key == "filter_epsilon") filter_epsilon = value;
  else if (key == "filter_stop_mult") filter_stop_mult = value;
  else if (key == "tau_feas") tau_feas = value;
  else if (key == "fw_max_iters") fw_max_iters = static_cast<int>(value);
  else if (key == "ladder_cutoff") ladder_cutoff = static_cast<Index>(value);
  else fail(ErrorCode::invalid_argument, "unknown profile key: " + key);
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void emit(PipelineState* state, TraceEvent::Kind kind, double s,
          Index candidate, std::string detail) {
  if (!state) return;
  state->trace.push_back({kind, s, candidate, std::move(detail)});
}

}  // namespace

std::string PipelineState::trace_text() const {
  std::ostringstream os;
  for (const TraceEvent& e : trace) {
    switch (e.kind) {
      case TraceEvent::Kind::scale_list: os << "scales"; break;
      case TraceEvent::Kind::decoder_run: os << "decode s=" << fmt(e.s); break;
      case TraceEvent::Kind::candidate_dedup_skipped:
        os << "skip s=" << fmt(e.s) << " cand=" << e.candidate;
        break;
      case TraceEvent::Kind::candidate_infeasible:
        os << "infeasible s=" << fmt(e.s) << " cand=" << e.candidate;
        break;
      case TraceEvent::Kind::candidate_accepted:
        os << "accept s=" << fmt(e.s) << " cand=" << e.candidate;
        break;
      case TraceEvent::Kind::size_pruned:
        os << "size-prune center=" << e.candidate;
        break;
      case TraceEvent::Kind::distance_pruned:
        os << "distance-prune center=" << e.candidate;
        break;
      case TraceEvent::Kind::stage_done: os << "stage"; break;
    }
    if (!e.detail.empty()) os << ": " << e.detail;
    os << "\n";
  }
  return os.str();
}

std::vector<IndexVec> voronoi_partition(const Mat& points,
                                        const std::vector<Vec>& centers) {
  require(!centers.empty(), ErrorCode::invalid_argument,
          "voronoi needs at least one center");
  std::vector<IndexVec> cells(centers.size());
  for (Index i = 0; i < points.rows(); ++i) {
    std::size_t best = 0;
    double best_sq = (points.row(i).transpose() - centers[0]).squaredNorm();
    for (std::size_t j = 1; j < centers.size(); ++j) {
      double sq = (points.row(i).transpose() - centers[j]).squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best = j;
      }
    }
    cells[best].push_back(i);
  }
  return cells;
}

std::vector<IndexVec> filtered_voronoi(const Mat& points,
                                       const std::vector<Vec>& centers,
                                       const ConstantsProfile& profile,
                                       double delta, std::uint64_t seed,
                                       std::uint64_t round) {
  (void)delta;  // failure budget is carried by the caller's contract
  std::vector<IndexVec> cells = voronoi_partition(points, centers);
  robust::FilterParams params;
  params.epsilon = profile.filter_epsilon;
  params.stop_mult = profile.filter_stop_mult;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (cells[j].size() < 2) continue;
    robust::FilterResult fr =
        robust::filter(points, cells[j], params,
                       derive_seed(seed, 0xF117E4, round, j));
    cells[j] = std::move(fr.kept);
  }
  return cells;
}

std::vector<Vec> main_pruning_loop(const Mat& points, PipelineState& state,
                                   double alpha,
                                   const ConstantsProfile& profile) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "alpha must lie in (0,1)");
  const double root_alpha = std::sqrt(alpha);

  // Per-candidate screens let each (mu, s) pair be pre-certified in O(log n).
  std::vector<feasibility::TraceScreen> screens;
  screens.reserve(state.mean_list.size());
  for (const CandidateMean& c : state.mean_list)
    screens.emplace_back(points, c.mean);

  const double mass_floor =
      profile.mass_lb_factor * alpha * static_cast<double>(points.rows());
  const int k_eff = static_cast<int>(
      std::min<Index>(static_cast<Index>(std::ceil(1.0 / alpha)), points.cols()));

  state.accepted.clear();
  state.accepted_scale.clear();
  for (double s : state.scales) {
    const double dedup_radius = profile.dedup_factor * s / root_alpha;
    const double rhs_coeff = profile.rhs_factor * s * s / alpha;
    for (std::size_t ci = 0; ci < state.mean_list.size(); ++ci) {
      const Vec& mu = state.mean_list[ci].mean;
      bool covered = false;
      for (const Vec& acc : state.accepted)
        if ((mu - acc).norm() <= dedup_radius) {
          covered = true;
          break;
        }
      if (covered) {
        emit(&state, TraceEvent::Kind::candidate_dedup_skipped, s,
             static_cast<Index>(ci), "");
        continue;
      }

      double screen_lb = screens[ci].lower_bound(rhs_coeff, mass_floor, k_eff,
                                                 points.cols());
      if (screen_lb > profile.tau_feas * rhs_coeff * mass_floor +
                          1e-12 * std::max(1.0, mass_floor)) {
        emit(&state, TraceEvent::Kind::candidate_infeasible, s,
             static_cast<Index>(ci), "screened lb=" + fmt(screen_lb));
        continue;
      }

      feasibility::ProgramInstance inst;
      inst.points = &points;
      inst.mu = mu;
      inst.s = s;
      inst.alpha = alpha;
      inst.rhs_factor = profile.rhs_factor;
      inst.mass_lb_factor = profile.mass_lb_factor;
      feasibility::SolveParams sp;
      sp.tau_feas = profile.tau_feas;
      sp.max_iters = profile.fw_max_iters;
      feasibility::FeasibilityResult res = feasibility::solve(inst, sp);
      if (res.status == feasibility::Status::feasible) {
        state.accepted.push_back(mu);
        state.accepted_scale.push_back(s);
        emit(&state, TraceEvent::Kind::candidate_accepted, s,
             static_cast<Index>(ci),
             "iters=" + std::to_string(res.iterations) +
                 " slack=" + fmt(res.residual));
      } else {
        emit(&state, TraceEvent::Kind::candidate_infeasible, s,
             static_cast<Index>(ci),
             std::string(res.certified ? "certified" : "iteration-cap") +
                 " lb=" + fmt(res.lower_bound));
      }
    }
  }
  return state.accepted;
}

std::vector<Vec> size_based_pruning(const Mat& points,
                                    const std::vector<Vec>& centers,
                                    double alpha,
                                    const ConstantsProfile& profile,
                                    PipelineState* state) {
  require(!centers.empty(), ErrorCode::invalid_argument,
          "size pruning needs at least one center");
  const double floor_size =
      profile.size_prune_factor * alpha * static_cast<double>(points.rows());

  std::vector<Vec> survivors = centers;
  std::vector<Index> ids(centers.size());
  for (std::size_t j = 0; j < centers.size(); ++j)
    ids[j] = static_cast<Index>(j);

  for (;;) {
    std::vector<IndexVec> cells = voronoi_partition(points, survivors);
    std::size_t victim = survivors.size();
    std::size_t victim_size = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<double>(cells[j].size()) >= floor_size) continue;
      if (victim == survivors.size() || cells[j].size() < victim_size) {
        victim = j;
        victim_size = cells[j].size();
      }
    }
    if (victim == survivors.size()) return survivors;
    emit(state, TraceEvent::Kind::size_pruned, 0.0, ids[victim],
         "cell=" + std::to_string(victim_size) +
             " floor=" + fmt(floor_size));
    survivors.erase(survivors.begin() + static_cast<std::ptrdiff_t>(victim));
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(victim));
    require(!survivors.empty(), ErrorCode::no_result,
            "size pruning removed every center");
  }
}

namespace {

struct CellStats {
  Vec mean;
  double scale = 0.0;
  bool empty = false;
};

std::vector<CellStats> cell_stats(const Mat& points,
                                  const std::vector<Vec>& centers,
                                  const std::vector<IndexVec>& cells) {
  std::vector<CellStats> st(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (cells[j].empty()) {
      st[j].mean = centers[j];
      st[j].scale = 0.0;
      st[j].empty = true;
      continue;
    }
    Vec mean = Vec::Zero(points.cols());
    for (Index i : cells[j]) mean += points.row(i).transpose();
    mean /= static_cast<double>(cells[j].size());
    st[j].mean = mean;
    st[j].scale = spectral::set_scale(points, cells[j]);
  }
  return st;
}

}  // namespace

std::vector<Vec> distance_based_pruning(const Mat& points,
                                        const std::vector<Vec>& centers,
                                        double alpha,
                                        const ConstantsProfile& profile,
                                        double delta, std::uint64_t seed,
                                        PipelineState* state) {
  require(!centers.empty(), ErrorCode::invalid_argument,
          "distance pruning needs at least one center");
  const double root_alpha = std::sqrt(alpha);
  std::vector<Vec> survivors = centers;
  std::vector<Index> ids(centers.size());
  for (std::size_t j = 0; j < centers.size(); ++j)
    ids[j] = static_cast<Index>(j);

  for (std::uint64_t round = 0;; ++round) {
    if (survivors.size() <= 1) return survivors;
    std::vector<IndexVec> cells =
        filtered_voronoi(points, survivors, profile, delta, seed, round);
    std::vector<CellStats> st = cell_stats(points, survivors, cells);

    std::size_t vj = survivors.size(), vj2 = survivors.size();
    for (std::size_t j = 0; j < survivors.size() && vj == survivors.size(); ++j)
      for (std::size_t j2 = j + 1; j2 < survivors.size(); ++j2) {
        double bound = profile.distance_prune_factor *
                       (st[j].scale + st[j2].scale) / root_alpha;
        if ((st[j].mean - st[j2].mean).norm() <= bound) {
          vj = j;
          vj2 = j2;
          break;
        }
      }
    if (vj == survivors.size()) return survivors;

    // Normalized nearest-neighbor distance of each violating member.
    auto nn_dist = [&](std::size_t j) {
      if (st[j].scale <= 0.0) return std::numeric_limits<double>::infinity();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < survivors.size(); ++t) {
        if (t == j) continue;
        best = std::min(best, (st[j].mean - st[t].mean).norm());
      }
      return best / st[j].scale;
    };
    std::size_t victim = nn_dist(vj) < nn_dist(vj2) ? vj : vj2;
    emit(state, TraceEvent::Kind::distance_pruned, 0.0, ids[victim],
         "pair=(" + std::to_string(vj) + "," + std::to_string(vj2) + ")");
    survivors.erase(survivors.begin() + static_cast<std::ptrdiff_t>(victim));
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(victim));
  }
}

ClusterOutput cluster(const Dataset& data, const ClusterOptions& opts) {
  const Mat& X = data.points();
  const Index n = X.rows();
  require(n >= 2, ErrorCode::invalid_argument,
          "clustering needs at least two points");
  require(opts.alpha > 0.0 && opts.alpha < 1.0, ErrorCode::invalid_argument,
          "alpha must lie in (0,1)");

  ClusterOutput out;
  PipelineState& st = out.state;

  robust::PairDistances dists(X);

  robust::StdevList scales =
      n <= opts.profile.ladder_cutoff
          ? robust::candidate_stdevs(X)
          : robust::scale_ladder_from_extremes(dists.min_positive(),
                                               dists.max(), n);
  if (scales.degenerate) {
    // Every point identical: one cluster holding everything.
    ClusterSet set;
    for (Index i = 0; i < n; ++i) set.indices.push_back(i);
    set.center = X.row(0).transpose();
    set.scale = 0.0;
    out.sets.push_back(std::move(set));
    out.assignments.assign(static_cast<std::size_t>(n), 0);
    emit(&st, TraceEvent::Kind::stage_done, 0.0, -1, "degenerate input");
    return out;
  }
  st.scales = scales.values;
  emit(&st, TraceEvent::Kind::scale_list, 0.0, -1,
       std::to_string(st.scales.size()) + " values in [" +
           fmt(st.scales.front()) + ", " + fmt(st.scales.back()) + "]");

  robust::DecoderParams dp;
  dp.c_ld = opts.profile.c_ld;
  for (std::size_t si = 0; si < st.scales.size(); ++si) {
    std::vector<robust::Candidate> cands =
        robust::list_decode_means(X, dists, st.scales[si], opts.alpha, dp);
    Index fresh = 0;
    for (robust::Candidate& c : cands) {
      bool seen = false;
      for (const CandidateMean& m : st.mean_list)
        if (m.origin_point == c.origin_point) {
          seen = true;
          break;
        }
      if (seen) continue;
      CandidateMean cm;
      cm.mean = std::move(c.mean);
      cm.origin_run = static_cast<Index>(si);
      cm.origin_point = c.origin_point;
      st.mean_list.push_back(std::move(cm));
      ++fresh;
    }
    if (!cands.empty())
      emit(&st, TraceEvent::Kind::decoder_run, st.scales[si], -1,
           std::to_string(cands.size()) + " candidates, " +
               std::to_string(fresh) + " new");
  }

  std::vector<Vec> accepted = main_pruning_loop(X, st, opts.alpha, opts.profile);
  require(!accepted.empty(), ErrorCode::no_result,
          "no viable centers: every candidate was rejected");
  emit(&st, TraceEvent::Kind::stage_done, 0.0, -1,
       "main loop accepted " + std::to_string(accepted.size()));

  std::vector<Vec> sized =
      size_based_pruning(X, accepted, opts.alpha, opts.profile, &st);
  emit(&st, TraceEvent::Kind::stage_done, 0.0, -1,
       "size pruning kept " + std::to_string(sized.size()));

  std::vector<Vec> pruned = distance_based_pruning(
      X, sized, opts.alpha, opts.profile, opts.delta, opts.seed, &st);
  emit(&st, TraceEvent::Kind::stage_done, 0.0, -1,
       "distance pruning kept " + std::to_string(pruned.size()));

  std::vector<IndexVec> cells = filtered_voronoi(
      X, pruned, opts.profile, opts.delta, opts.seed, 0x0FFFFFFFull);
  out.assignments.assign(static_cast<std::size_t>(n), kUnassigned);
  for (std::size_t j = 0; j < cells.size(); ++j) {
    ClusterSet set;
    set.indices = cells[j];
    if (!set.indices.empty()) {
      Vec mean = Vec::Zero(X.cols());
      for (Index i : set.indices) mean += X.row(i).transpose();
      mean /= static_cast<double>(set.indices.size());
      set.center = mean;
      set.scale = spectral::set_scale(X, set.indices);
    } else {
      set.center = pruned[j];
      set.scale = 0.0;
    }
    for (Index i : set.indices)
      out.assignments[static_cast<std::size_t>(i)] =
          static_cast<std::int32_t>(j);
    out.sets.push_back(std::move(set));
  }
  return out;
}

ClusterOutput output_from_assignments(const Mat& points,
                                      std::span<const std::int32_t> labels) {
  require(static_cast<Index>(labels.size()) == points.rows(),
          ErrorCode::invalid_argument,
          "assignment length must match point count");
  std::int32_t max_id = -1;
  for (std::int32_t v : labels) {
    require(v >= -1, ErrorCode::invalid_argument,
            "assignment ids must be >= -1");
    max_id = std::max(max_id, v);
  }
  ClusterOutput out;
  out.assignments.assign(labels.begin(), labels.end());
  out.sets.resize(static_cast<std::size_t>(max_id + 1));
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0)
      out.sets[static_cast<std::size_t>(labels[i])].indices.push_back(
          static_cast<Index>(i));
  for (ClusterSet& set : out.sets) {
    if (set.indices.empty()) {
      set.center = Vec::Zero(points.cols());
      set.scale = 0.0;
      continue;
    }
    Vec mean = Vec::Zero(points.cols());
    for (Index i : set.indices) mean += points.row(i).transpose();
    set.center = mean / static_cast<double>(set.indices.size());
    set.scale = spectral::set_scale(points, set.indices);
  }
  return out;
}

}  // namespace fc::pipeline
