#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace fc {

constexpr std::int32_t kOutlierLabel = -1;
constexpr std::int32_t kUnassigned = -1;

// n points in R^d, one per row.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Mat points) : points_(std::move(points)) {
    require(points_.allFinite(), ErrorCode::invalid_argument,
            "dataset has non-finite coordinates");
  }

  Index n() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const Mat& points() const { return points_; }
  Mat& points() { return points_; }

 private:
  Mat points_;
};

// True component structure of a generated dataset: per-point labels (-1 marks
// adversarial points) plus the population parameters of each component.
struct GroundTruth {
  std::vector<std::int32_t> labels;  // size n, values in [0,k) or -1
  Mat means;                         // k x d
  std::vector<double> sigmas;        // k, covariance operator-norm bounds
  std::vector<double> weights;       // k

  Index k() const { return means.rows(); }
  Index n() const { return static_cast<Index>(labels.size()); }
  // Indices of cluster c, ascending.
  IndexVec members(std::int32_t c) const;
};

// Binary formats. All integers and doubles little-endian.
//   dataset:     "FCDS" u32 version=1, u64 n, u64 d, n*d float64 row-major
//   labels:      "FCLB" u64 n, n * int32 (-1 = outlier)
//   assignments: "FCAS" u64 n, n * int32 (-1 = unassigned)
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

void save_labels(const std::vector<std::int32_t>& labels,
                 const std::string& path);
std::vector<std::int32_t> load_labels(const std::string& path);

void save_assignments(const std::vector<std::int32_t>& assign,
                      const std::string& path);
std::vector<std::int32_t> load_assignments(const std::string& path);

}  // namespace fc
