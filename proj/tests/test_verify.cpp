#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/datagen.hpp"
#include "core/pipeline.hpp"
#include "core/rng.hpp"
#include "core/spectral.hpp"
#include "core/types.hpp"
#include "core/verify.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using fc::Index;
using fc::IndexVec;
using fc::Mat;
using fc::Vec;
namespace vf = fc::verify;
namespace dg = fc::datagen;
namespace pl = fc::pipeline;

namespace {

// Build output sets directly from truth labels.
pl::ClusterOutput output_of_truth(const Mat& pts, const fc::GroundTruth& t) {
  return pl::output_from_assignments(pts, t.labels);
}

dg::Generated well_separated(Index n, std::uint64_t seed) {
  dg::MixtureSpec spec =
      dg::preset_mixspec("separated_gaussians", 6, 1.0 / 3.0, 12.0);
  return dg::generate(spec, n, seed);
}

}  // namespace

TEST_CASE("the ground truth clustering verifies against itself") {
  dg::Generated g = well_separated(900, 3);
  pl::ClusterOutput out = output_of_truth(g.data.points(), g.truth);
  vf::RefinementReport rep =
      vf::verify_refinement(out, g.truth, 1.0 / 3.0, 13.0, 8.0);
  CHECK(rep.pass);
  CHECK(rep.m == 3);
  CHECK(rep.k == 3);
  CHECK(rep.coverage_frac == doctest::Approx(1.0));
  CHECK(rep.min_purity == doctest::Approx(1.0));
  CHECK(rep.worst_missed_frac == doctest::Approx(0.0));
  CHECK(rep.worst_spurious == doctest::Approx(0.0));
  CHECK(rep.worst_mean_ratio <= 1.0);

  // Stronger c only relaxes the mean clause.
  CHECK(vf::verify_refinement(out, g.truth, 1.0 / 3.0, 100.0, 8.0).pass);
}

TEST_CASE("merging two true clusters fails verification") {
  dg::Generated g = well_separated(900, 4);
  std::vector<std::int32_t> merged = g.truth.labels;
  for (auto& l : merged)
    if (l == 1) l = 0;
  pl::ClusterOutput out =
      pl::output_from_assignments(g.data.points(), merged);
  vf::RefinementReport rep =
      vf::verify_refinement(out, g.truth, 1.0 / 3.0, 13.0, 8.0);
  CHECK_FALSE(rep.pass);
  // The merged set is impure and spills far outside its matched truth set.
  CHECK((rep.min_purity < 0.96 || rep.worst_spurious > rep.spurious_cap ||
         !rep.mean_ok));
}

TEST_CASE("dropping a cluster fails coverage and count") {
  dg::Generated g = well_separated(900, 5);
  std::vector<std::int32_t> dropped = g.truth.labels;
  for (auto& l : dropped)
    if (l == 2) l = -1;
  pl::ClusterOutput out =
      pl::output_from_assignments(g.data.points(), dropped);
  // Trailing empty set is still materialized for id 2; verification sees
  // only two usable sets and one third of the points unassigned.
  vf::RefinementReport rep =
      vf::verify_refinement(out, g.truth, 1.0 / 3.0, 13.0, 8.0);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.coverage_ok);
}

TEST_CASE("an oversized output list fails the count clause") {
  dg::Generated g = well_separated(900, 6);
  std::vector<std::int32_t> labels = g.truth.labels;
  // Shatter cluster 0 into four pieces: m = 6 > 1.07/alpha = 3.21.
  int next = 3;
  int seen = 0;
  for (auto& l : labels)
    if (l == 0) {
      l = static_cast<std::int32_t>(3 + (seen++ % 3));
      if (next < 6) next++;
    }
  pl::ClusterOutput out = pl::output_from_assignments(g.data.points(), labels);
  vf::RefinementReport rep =
      vf::verify_refinement(out, g.truth, 1.0 / 3.0, 13.0, 8.0);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.count_ok);
}

TEST_CASE("pairwise separation clause reacts to its factor") {
  // Two point-mass output sets 1 apart with zero within-set spread satisfy
  // any factor (sigma terms vanish); nonzero spread does not.
  Mat pts(40, 1);
  for (Index i = 0; i < 20; ++i) pts(i, 0) = (i % 2) ? 0.1 : -0.1;
  for (Index i = 20; i < 40; ++i) pts(i, 0) = 10.0 + ((i % 2) ? 0.1 : -0.1);
  std::vector<std::int32_t> labels(40, 0);
  for (Index i = 20; i < 40; ++i) labels[static_cast<std::size_t>(i)] = 1;
  pl::ClusterOutput out = pl::output_from_assignments(pts, labels);

  fc::GroundTruth truth;
  truth.labels = labels;
  truth.means = Mat(2, 1);
  truth.means << 0.0, 10.0;
  truth.sigmas = {0.1, 0.1};
  truth.weights = {0.5, 0.5};

  vf::RefinementReport tight =
      vf::verify_refinement(out, truth, 0.5, 13.0, 8.0);
  CHECK(tight.separation_ok);  // 10 > 8*(0.1+0.1)/sqrt(0.5) = 2.26
  vf::RefinementReport loose =
      vf::verify_refinement(out, truth, 0.5, 13.0, 1000.0);
  CHECK_FALSE(loose.separation_ok);  // 10 < 1000*0.283
  CHECK(loose.worst_pair_ratio < 1.0);
}

TEST_CASE("empty output fails every clause gracefully") {
  Mat pts = Mat::Zero(10, 2);
  pl::ClusterOutput out;
  out.assignments.assign(10, -1);
  fc::GroundTruth truth;
  truth.labels.assign(10, 0);
  truth.means = Mat::Zero(1, 2);
  truth.sigmas = {1.0};
  truth.weights = {1.0};
  vf::RefinementReport rep = vf::verify_refinement(out, truth, 0.5, 13.0, 8.0);
  CHECK_FALSE(rep.pass);
  CHECK(rep.m == 0);
}

TEST_CASE("report text and json expose the same verdict") {
  dg::Generated g = well_separated(600, 7);
  pl::ClusterOutput out = output_of_truth(g.data.points(), g.truth);
  vf::RefinementReport rep =
      vf::verify_refinement(out, g.truth, 1.0 / 3.0, 13.0, 8.0);

  std::string text = rep.text();
  CHECK(text.find("PASS") != std::string::npos);
  CHECK(text.find("coverage") != std::string::npos);

  nlohmann::json j = nlohmann::json::parse(rep.json());
  CHECK(j.at("pass").get<bool>() == rep.pass);
  CHECK(j.at("m").get<int>() == 3);
  CHECK(j.at("coverage_ok").get<bool>());
  CHECK(j.at("H").is_array());
  CHECK(j.at("H").size() == 3);
}

TEST_CASE("the both-truths fixture verifies under either merge") {
  dg::TwoTruths tt = dg::nonidentifiable_fixture(400);
  // Output the four point masses as four sets.
  std::vector<std::int32_t> labels(400);
  for (Index i = 0; i < 400; ++i) {
    double x = tt.data.points()(i, 0);
    labels[static_cast<std::size_t>(i)] =
        x < 0.5 ? 0 : (x < 500.0 ? 1 : (x < 1000.5 ? 2 : 3));
  }
  pl::ClusterOutput out =
      pl::output_from_assignments(tt.data.points(), labels);
  CHECK(vf::verify_refinement(out, tt.merged_first, 0.25, 13.0, 8.0).pass);
  CHECK(vf::verify_refinement(out, tt.merged_second, 0.25, 13.0, 8.0).pass);
}

TEST_CASE("nlsc exhaustive mode equals brute-force enumeration") {
  fc::Rng rng(71);
  Mat pts = fixture::gaussian_blob(rng, 11, 2, 1.0);
  IndexVec all = fixture::all_indices(11);
  double alpha = 0.35;
  Index n_total = 20;  // q = ceil(0.8 * 0.35 * 20) = 6

  vf::NlscResult got = vf::nlsc_spotcheck(pts, all, alpha, n_total, 0, 1,
                                          vf::NlscMode::exhaustive);
  REQUIRE_FALSE(got.vacuous);

  double sigma_all = std::sqrt(oracle::subset_cov_opnorm(pts, all));
  double worst = 1e300;
  Index examined = 0;
  oracle::for_each_subset(11, 6, [&](const IndexVec& idx) {
    double s = std::sqrt(oracle::subset_cov_opnorm(pts, idx));
    worst = std::min(worst, s / sigma_all);
    ++examined;
  });
  CHECK(got.worst_ratio == doctest::Approx(worst).epsilon(1e-9));
  CHECK(got.subsets_examined == examined);
  CHECK(got.pass == (worst >= 0.1));
}

TEST_CASE("nlsc flags vacuous subsets and degenerate scales") {
  Mat pts = Mat::Ones(5, 2);
  IndexVec all = fixture::all_indices(5);

  // Required subset size exceeds |S|.
  vf::NlscResult vac = vf::nlsc_spotcheck(pts, all, 0.9, 100, 0, 1,
                                          vf::NlscMode::exhaustive);
  CHECK(vac.vacuous);
  CHECK(vac.pass);

  // Zero spread: every ratio is one.
  vf::NlscResult flat = vf::nlsc_spotcheck(pts, all, 0.5, 5, 4, 1,
                                           vf::NlscMode::exhaustive);
  CHECK(flat.pass);
  CHECK(flat.worst_ratio == doctest::Approx(1.0));
}

TEST_CASE("nlsc sampled mode finds planted low-variance windows") {
  // 30 points: 24 tightly packed, 6 spread far. The tight block is exactly
  // the minimum subset size, so the sliding windows must find it.
  Mat pts(30, 1);
  for (Index i = 0; i < 24; ++i)
    pts(i, 0) = 1e-3 * static_cast<double>(i);
  for (Index i = 24; i < 30; ++i)
    pts(i, 0) = 100.0 * static_cast<double>(i - 23);
  IndexVec all = fixture::all_indices(30);
  // n_total = 30, alpha = 0.8: q = ceil(0.8*0.8*30) = 20, inside the block.
  vf::NlscResult got = vf::nlsc_spotcheck(pts, all, 0.8, 30, 32, 5,
                                          vf::NlscMode::sampled);
  CHECK_FALSE(got.pass);
  CHECK(got.worst_ratio < 0.01);
}

TEST_CASE("nlsc sampled mode accepts gaussian clusters") {
  fc::Rng rng(72);
  Mat pts = fixture::gaussian_blob(rng, 300, 4, 1.0);
  IndexVec all = fixture::all_indices(300);
  vf::NlscResult got = vf::nlsc_spotcheck(pts, all, 0.4, 750, 64, 9,
                                          vf::NlscMode::sampled);
  CHECK(got.pass);
  CHECK(got.worst_ratio >= 0.5);
}

TEST_CASE("metrics table is csv shaped and permutation invariant") {
  dg::Generated g = well_separated(600, 8);
  pl::ClusterOutput out = output_of_truth(g.data.points(), g.truth);
  vf::MetricsTable table = vf::clustering_metrics(out, g.truth);

  std::string csv = table.csv();
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "metric,i,j,value");
  int lines = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++lines;
  CHECK(lines == static_cast<int>(table.rows.size()));

  auto global = [&](const vf::MetricsTable& t, const std::string& name) {
    for (const auto& row : t.rows)
      if (row.metric == name) return row.value;
    return -1.0;
  };
  CHECK(global(table, "coverage_frac") == doctest::Approx(1.0));
  CHECK(global(table, "m") == doctest::Approx(3.0));

  // Relabeling output sets permutes rows but not global values.
  std::vector<std::int32_t> perm = g.truth.labels;
  for (auto& l : perm) l = static_cast<std::int32_t>((l + 1) % 3);
  pl::ClusterOutput out2 = pl::output_from_assignments(g.data.points(), perm);
  vf::MetricsTable table2 = vf::clustering_metrics(out2, g.truth);
  CHECK(global(table2, "coverage_frac") == doctest::Approx(1.0));
  CHECK(global(table2, "m") == doctest::Approx(3.0));
}
