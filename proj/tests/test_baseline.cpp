#include <doctest.h>

#include <set>
#include <vector>

#include "core/baseline.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"
#include "support/fixtures.hpp"

using fc::Index;
using fc::Mat;
using fc::Vec;

TEST_CASE("kpca_kmeans recovers well-separated blobs") {
  fc::Rng rng(81);
  Mat pts = fixture::vstack(
      fixture::vstack(
          fixture::gaussian_blob(rng, 100, 5, 1.0, Vec::Zero(5)),
          fixture::gaussian_blob(rng, 100, 5, 1.0, Vec::Constant(5, 60.0))),
      fixture::gaussian_blob(rng, 100, 5, 1.0, Vec::Constant(5, -60.0)));
  std::vector<std::int32_t> labels = fc::baseline::kpca_kmeans(pts, 3, 50, 7);
  REQUIRE(labels.size() == 300);

  for (int block = 0; block < 3; ++block) {
    std::set<std::int32_t> block_labels(labels.begin() + 100 * block,
                                        labels.begin() + 100 * (block + 1));
    CHECK(block_labels.size() == 1);
  }
  std::set<std::int32_t> distinct(labels.begin(), labels.end());
  CHECK(distinct.size() == 3);
  for (auto l : labels) {
    CHECK(l >= 0);
    CHECK(l < 3);
  }
}

TEST_CASE("kpca_kmeans is deterministic and handles k=1") {
  fc::Rng rng(82);
  Mat pts = fixture::gaussian_blob(rng, 80, 3, 2.0);
  auto a = fc::baseline::kpca_kmeans(pts, 4, 30, 11);
  auto b = fc::baseline::kpca_kmeans(pts, 4, 30, 11);
  CHECK(a == b);

  auto one = fc::baseline::kpca_kmeans(pts, 1, 10, 1);
  for (auto l : one) CHECK(l == 0);
}
