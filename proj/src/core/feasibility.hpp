#pragma once

#include <optional>

#include "core/types.hpp"

namespace fc::feasibility {

// Decision problem: do weights w in [0,1]^n exist with
//   sum_x w_x >= mass_lb_factor * alpha * n   and
//   ||sum_x w_x (x-mu)(x-mu)^T||_(k) <= (rhs_factor * s^2 / alpha) * sum_x w_x
// where ||.||_(k) is the Ky-Fan norm with k = ceil(1/alpha)?
struct ProgramInstance {
  const Mat* points = nullptr;  // n x d, borrowed
  Vec mu;
  double s = 0.0;
  double alpha = 0.0;
  double rhs_factor = 4.0;       // paper form: 2 C^2
  double mass_lb_factor = 0.97;
  int kyfan_k = 0;               // 0 = derive ceil(1/alpha)

  int effective_k() const;
  double rhs_coeff() const;      // rhs_factor * s^2 / alpha
  double mass_floor() const;     // mass_lb_factor * alpha * n
};

enum class Status { feasible, infeasible };

struct FeasibilityResult {
  Status status = Status::infeasible;
  std::vector<double> w;     // certificate weights when feasible
  int iterations = 0;
  // Relative constraint slack at the best iterate:
  //   (kyfan - rhs_coeff*mass) / max(rhs_coeff*mass, 1).
  double residual = 0.0;
  // Best Frank-Wolfe lower bound on the objective; > 0 certifies
  // infeasibility without exhausting the iteration budget.
  double lower_bound = -std::numeric_limits<double>::infinity();
  bool certified = false;    // infeasible by bound rather than iteration cap
};

struct SolveParams {
  double tau_feas = 1e-3;  // relative feasibility tolerance
  int max_iters = 500;
};

// Decide the program by Frank-Wolfe descent on
//   phi(w) = ||sum w_x (x-mu)(x-mu)^T||_(k) - rhs_coeff * sum w_x
// over {w in [0,1]^n : sum w >= mass_floor}: subgradient from the top-k
// eigenvectors, exact linear minimization (1 on negative-gradient
// coordinates, then fill by ascending gradient to the mass floor), convex
// line search on the blended moment matrix. Declares feasible once
// phi <= tau_feas * rhs_coeff * mass; declares infeasible when the duality
// bound phi(w) + min_v <g, v-w> rises above zero, or at the iteration cap.
// A trace-based linear relaxation screens clearly infeasible instances first.
FeasibilityResult solve(const ProgramInstance& inst, const SolveParams& params);

struct SolutionCheck {
  bool mass_ok = false;
  bool kyfan_ok = false;
  double mass = 0.0;
  double kyfan = 0.0;
  double rhs = 0.0;  // rhs_coeff * mass
};

// Evaluate both constraints of the program at w directly from the moment
// definitions, independent of solver state. `rel_tol` loosens the Ky-Fan
// comparison to kyfan <= rhs * (1 + rel_tol).
SolutionCheck check_solution(const ProgramInstance& inst,
                             std::span<const double> w, double rel_tol = 0.0);

// Sorted squared distances to mu with prefix sums; lets the caller screen
// many scales s against one candidate mu in O(log n) each. Returns the best
// value of the linear relaxation
//   min_w sum_x w_x ((k/d) ||x-mu||^2 - rhs_coeff)  s.t. mass floor,
// which lower-bounds phi; positive values certify infeasibility.
class TraceScreen {
 public:
  TraceScreen(const Mat& points, const Vec& mu);
  double lower_bound(double rhs_coeff, double mass_floor, int k_eff,
                     Index dim) const;

 private:
  std::vector<double> sorted_sq_;  // ascending
  std::vector<double> prefix_;     // prefix sums of sorted_sq_
};

}  // namespace fc::feasibility
