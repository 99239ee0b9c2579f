#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/feasibility.hpp"
#include "core/rng.hpp"
#include "core/spectral.hpp"
#include "core/types.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using fc::Index;
using fc::Mat;
using fc::Vec;
namespace fs = fc::feasibility;

namespace {

fs::ProgramInstance make_instance(const Mat& pts, Vec mu, double s,
                                  double alpha, int kyfan_k = 0) {
  fs::ProgramInstance inst;
  inst.points = &pts;
  inst.mu = std::move(mu);
  inst.s = s;
  inst.alpha = alpha;
  inst.kyfan_k = kyfan_k;
  return inst;
}

}  // namespace

TEST_CASE("instance accessors derive k, rhs and mass floor") {
  Mat pts = Mat::Zero(10, 2);
  fs::ProgramInstance inst = make_instance(pts, Vec::Zero(2), 2.0, 0.3);
  CHECK(inst.effective_k() == 4);  // ceil(1/0.3)
  CHECK(inst.rhs_coeff() == doctest::Approx(4.0 * 4.0 / 0.3));
  CHECK(inst.mass_floor() == doctest::Approx(0.97 * 0.3 * 10.0));

  inst.kyfan_k = 7;
  CHECK(inst.effective_k() == 7);
}

TEST_CASE("solve certifies a tight cluster around the candidate") {
  fc::Rng rng(51);
  Mat pts = fixture::gaussian_blob(rng, 60, 3, 1.0);
  fs::ProgramInstance inst = make_instance(pts, Vec::Zero(3), 1.5, 0.5);
  fs::FeasibilityResult res = fs::solve(inst, {});
  REQUIRE(res.status == fs::Status::feasible);
  REQUIRE(res.w.size() == 60);

  double mass = 0.0;
  for (double w : res.w) {
    CHECK(w >= -1e-12);
    CHECK(w <= 1.0 + 1e-12);
    mass += w;
  }
  CHECK(mass >= inst.mass_floor() * (1 - 1e-9));

  fs::SolutionCheck chk = fs::check_solution(inst, res.w, 1e-3);
  CHECK(chk.mass_ok);
  CHECK(chk.kyfan_ok);
  CHECK(res.residual <= 1e-3);
}

TEST_CASE("solve rejects a candidate far from all mass") {
  fc::Rng rng(52);
  Mat pts = fixture::gaussian_blob(rng, 60, 3, 1.0);
  fs::ProgramInstance inst =
      make_instance(pts, Vec::Constant(3, 500.0), 1.0, 0.5);
  fs::FeasibilityResult res = fs::solve(inst, {});
  CHECK(res.status == fs::Status::infeasible);
  CHECK(res.certified);
  CHECK(res.lower_bound > 0.0);
}

TEST_CASE("check_solution computes mass and kyfan against the oracle") {
  fc::Rng rng(53);
  Mat pts = fixture::gaussian_blob(rng, 20, 3, 2.0);
  fs::ProgramInstance inst = make_instance(pts, Vec::Zero(3), 1.0, 0.4, 2);
  std::vector<double> w(20);
  for (auto& x : w) x = rng.uniform();

  fs::SolutionCheck chk = fs::check_solution(inst, w, 0.0);
  double mass = 0.0;
  for (double x : w) mass += x;
  Mat mom = oracle::second_moment(pts, w, inst.mu);
  CHECK(chk.mass == doctest::Approx(mass));
  CHECK(chk.kyfan == doctest::Approx(oracle::kyfan(mom, 2)).epsilon(1e-7));
  CHECK(chk.rhs == doctest::Approx(inst.rhs_coeff() * mass));
}

TEST_CASE("trace screen lower-bounds the objective of any feasible weights") {
  fc::Rng rng(54);
  for (int trial = 0; trial < 30; ++trial) {
    Index n = 8 + static_cast<Index>(rng.below(10));
    Index d = 1 + static_cast<Index>(rng.below(3));
    Mat pts(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) pts(i, j) = rng.uniform(-5.0, 5.0);
    Vec mu(d);
    for (Index j = 0; j < d; ++j) mu[j] = rng.uniform(-5.0, 5.0);
    fs::ProgramInstance inst =
        make_instance(pts, mu, std::pow(10.0, rng.uniform(-1.0, 1.0)),
                      rng.uniform(0.2, 0.7), static_cast<int>(d));

    fs::TraceScreen screen(pts, mu);
    double lb = screen.lower_bound(inst.rhs_coeff(), inst.mass_floor(),
                                   inst.effective_k(), d);

    // With full-dimensional Ky-Fan rank the bound is the exact optimum.
    double opt = oracle::trace_lp_optimum(pts, mu, inst.rhs_coeff(),
                                          inst.mass_floor());
    CHECK(lb == doctest::Approx(opt).epsilon(1e-9));

    // And it never exceeds the objective of a sampled feasible weighting.
    for (int t = 0; t < 5; ++t) {
      std::vector<double> w(static_cast<std::size_t>(n));
      double mass = 0.0;
      for (auto& x : w) {
        x = rng.uniform();
        mass += x;
      }
      if (mass < inst.mass_floor()) {
        double scale = inst.mass_floor() / mass;
        bool ok = true;
        for (auto& x : w) {
          x *= scale;
          if (x > 1.0) ok = false;
        }
        if (!ok) continue;
      }
      fs::SolutionCheck chk = fs::check_solution(inst, w, 0.0);
      CHECK(lb <= chk.kyfan - chk.rhs + 1e-9 * std::max(1.0, chk.rhs));
    }
  }
}

TEST_CASE("solve agrees with the exact oracle on full-rank instances") {
  fc::Rng rng(55);
  int agree = 0, margin = 0, total = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Index n = 6 + static_cast<Index>(rng.below(14));
    Index d = 1 + static_cast<Index>(rng.below(3));
    Mat pts(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) pts(i, j) = 3.0 * rng.normal();
    Vec mu(d);
    for (Index j = 0; j < d; ++j)
      mu[j] = rng.uniform() < 0.5 ? 0.0 : rng.uniform(-6.0, 6.0);
    fs::ProgramInstance inst =
        make_instance(pts, mu, std::pow(10.0, rng.uniform(-0.7, 0.7)),
                      rng.uniform(0.2, 0.6), static_cast<int>(d));

    fs::SolveParams params;
    double opt = oracle::trace_lp_optimum(pts, mu, inst.rhs_coeff(),
                                          inst.mass_floor());
    double band = 2.0 * params.tau_feas * inst.rhs_coeff() * inst.mass_floor();
    ++total;
    if (std::abs(opt) <= band) {
      ++margin;
      continue;
    }
    fs::FeasibilityResult res = fs::solve(inst, params);
    bool want_feasible = opt <= 0.0;
    if ((res.status == fs::Status::feasible) == want_feasible) ++agree;
  }
  CHECK(agree == total - margin);
  CHECK(margin <= total / 10);
}

TEST_CASE("solve validates its inputs") {
  Mat pts = Mat::Zero(4, 2);
  fs::ProgramInstance inst = make_instance(pts, Vec::Zero(2), 1.0, 0.0);
  CHECK_THROWS_AS(fs::solve(inst, {}), fc::Error);
  inst.alpha = 0.5;
  inst.mu = Vec::Zero(3);  // dimension mismatch
  CHECK_THROWS_AS(fs::solve(inst, {}), fc::Error);
}
