#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = std::int64_t;
using IndexVec = std::vector<Index>;

// Every core failure is thrown as Error; the C layer maps `code` to a status
// value, so codes here must stay in sync with include/finecluster/finecluster.h.
enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  numeric = 3,
  no_result = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace fc
