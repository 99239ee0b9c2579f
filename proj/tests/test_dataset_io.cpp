#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"
#include "support/fixtures.hpp"

using fc::Index;
using fc::Mat;

namespace {

std::filesystem::path temp_file(const char* tag) {
  static int counter = 0;
  return std::filesystem::temp_directory_path() /
         (std::string("fc_io_") + tag + "_" + std::to_string(counter++));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("dataset round-trips bit-exact values and bytes") {
  fc::Rng rng(21);
  Mat pts = fixture::gaussian_blob(rng, 37, 5, 1e6);
  pts(0, 0) = 0.0;
  pts(1, 1) = -0.0;
  pts(2, 2) = 1e-300;
  fc::Dataset ds(pts);

  auto p1 = temp_file("ds");
  fc::save_dataset(ds, p1.string());
  fc::Dataset back = fc::load_dataset(p1.string());
  REQUIRE(back.n() == 37);
  REQUIRE(back.dim() == 5);
  CHECK(back.points() == pts);  // exact, not approximate

  auto p2 = temp_file("ds");
  fc::save_dataset(back, p2.string());
  CHECK(slurp(p1) == slurp(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("labels and assignments round-trip") {
  std::vector<std::int32_t> labels = {0, 1, 2, -1, 0, 7, -1};
  auto p = temp_file("lb");
  fc::save_labels(labels, p.string());
  CHECK(fc::load_labels(p.string()) == labels);
  std::filesystem::remove(p);

  auto q = temp_file("as");
  fc::save_assignments(labels, q.string());
  CHECK(fc::load_assignments(q.string()) == labels);
  std::filesystem::remove(q);
}

TEST_CASE("loaders reject garbage and missing files") {
  auto p = temp_file("bad");
  {
    std::ofstream out(p, std::ios::binary);
    out << "not a real file";
  }
  CHECK_THROWS_AS(fc::load_dataset(p.string()), fc::Error);
  CHECK_THROWS_AS(fc::load_labels(p.string()), fc::Error);
  std::filesystem::remove(p);

  CHECK_THROWS_AS(fc::load_dataset((p / "nope").string()), fc::Error);
}

TEST_CASE("dataset constructor rejects non-finite coordinates") {
  Mat pts = Mat::Zero(2, 2);
  pts(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fc::Dataset{pts}, fc::Error);
}

TEST_CASE("truth membership lists follow labels") {
  fc::GroundTruth truth;
  truth.labels = {0, 1, 0, -1, 1, 1};
  truth.means = Mat::Zero(2, 3);
  truth.sigmas = {1.0, 2.0};
  truth.weights = {0.5, 0.5};
  CHECK(truth.k() == 2);
  CHECK(truth.n() == 6);
  CHECK(truth.members(0) == fc::IndexVec{0, 2});
  CHECK(truth.members(1) == fc::IndexVec{1, 4, 5});
}
