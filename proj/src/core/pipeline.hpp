#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "core/dataset.hpp"
#include "core/robust.hpp"
#include "core/types.hpp"

namespace fc::pipeline {

// Threshold bundle driving every stage. The `paper` profile carries the
// verbatim analysis constants (with C the list-decoding constant); the
// `practical` profile keeps the same structure with desk-scale values.
struct ConstantsProfile {
  std::string name;
  double C = 1.0;
  double c_ld = 2.0;            // decoder radius constant
  double dedup_factor = 6.0;    // accept mu only if > dedup_factor*s/sqrt(alpha) from list
  double mass_lb_factor = 0.97;
  double rhs_factor = 4.0;      // program rhs: rhs_factor * s^2 / alpha
  double size_prune_factor = 0.96;
  double distance_prune_factor = 8.0;  // * (scale_j + scale_j') / sqrt(alpha)
  double filter_epsilon = 0.04;
  double filter_stop_mult = 9.0;
  double tau_feas = 1e-3;
  int fw_max_iters = 500;
  // Inputs up to this many points use the exact pairwise scale list; larger
  // inputs use the geometric ladder with the same covering guarantee.
  Index ladder_cutoff = 64;

  static ConstantsProfile paper();
  static ConstantsProfile practical();
  static ConstantsProfile by_name(const std::string& name);

  // Numeric field access for override plumbing ("--set key=value").
  void set(const std::string& key, double value);
};

struct TraceEvent {
  enum class Kind {
    scale_list,
    decoder_run,
    candidate_dedup_skipped,
    candidate_infeasible,
    candidate_accepted,
    size_pruned,
    distance_pruned,
    stage_done,
  };
  Kind kind;
  double s = 0.0;
  Index candidate = -1;  // index into L_mean, or pruned center index
  std::string detail;
};

struct CandidateMean {
  Vec mean;
  Index origin_run = -1;    // scale index that produced it
  Index origin_point = -1;  // data point it came from
};

struct PipelineState {
  std::vector<double> scales;             // ascending
  std::vector<CandidateMean> mean_list;   // deduplicated candidate means
  std::vector<Vec> accepted;              // centers accepted by the main loop
  std::vector<double> accepted_scale;     // scale at acceptance time
  std::vector<TraceEvent> trace;

  std::string trace_text() const;
};

struct ClusterSet {
  IndexVec indices;  // ascending
  Vec center;        // mean of the set
  double scale = 0;  // sqrt of covariance operator norm of the set
};

struct ClusterOutput {
  std::vector<ClusterSet> sets;  // disjoint
  std::vector<std::int32_t> assignments;  // size n; -1 = unassigned
  PipelineState state;

  Index m() const { return static_cast<Index>(sets.size()); }
};

// Nearest-center partition; ties go to the lowest center index. Cell j lists
// row indices ascending.
std::vector<IndexVec> voronoi_partition(const Mat& points,
                                        const std::vector<Vec>& centers);

// Voronoi cells passed through the outlier filter (empty cells stay empty,
// cells of size < 2 pass through unfiltered). Filter draws are reseeded
// deterministically per (seed, round, cell).
std::vector<IndexVec> filtered_voronoi(const Mat& points,
                                       const std::vector<Vec>& centers,
                                       const ConstantsProfile& profile,
                                       double delta, std::uint64_t seed,
                                       std::uint64_t round);

// Decide candidate means scale-by-scale: for s ascending and each candidate
// mean not already covered within dedup_factor*s/sqrt(alpha), accept it when
// the weight program at (mu, s) is feasible.
std::vector<Vec> main_pruning_loop(const Mat& points, PipelineState& state,
                                   double alpha,
                                   const ConstantsProfile& profile);

// Drop centers whose Voronoi cell falls below size_prune_factor*alpha*n,
// smallest cell first (ties to the lowest index), recomputing cells after
// each deletion. Survivors keep their relative order.
std::vector<Vec> size_based_pruning(const Mat& points,
                                    const std::vector<Vec>& centers,
                                    double alpha,
                                    const ConstantsProfile& profile,
                                    PipelineState* state);

// Merge centers whose filtered cells sit closer than
// distance_prune_factor*(scale_j+scale_j')/sqrt(alpha): the first violating
// pair in lexicographic order loses the member with the smaller normalized
// nearest-neighbor distance (zero-scale sets count as infinitely far).
std::vector<Vec> distance_based_pruning(const Mat& points,
                                        const std::vector<Vec>& centers,
                                        double alpha,
                                        const ConstantsProfile& profile,
                                        double delta, std::uint64_t seed,
                                        PipelineState* state);

// Full pipeline: scale list, decoder runs, main loop, size pruning, distance
// pruning, final filtered Voronoi. Deterministic given (points, options).
struct ClusterOptions {
  double alpha = 0.0;
  double delta = 0.01;
  std::uint64_t seed = 0;
  ConstantsProfile profile = ConstantsProfile::practical();
};

ClusterOutput cluster(const Dataset& data, const ClusterOptions& opts);

// Rebuild a ClusterOutput (sets, centers, scales) from a stored assignment
// vector; -1 entries stay unassigned. Set ids must be contiguous from 0.
ClusterOutput output_from_assignments(const Mat& points,
                                      std::span<const std::int32_t> labels);

}  // namespace fc::pipeline
