#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tarc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised for violated preconditions: bad dimensions, out-of-range
/// arguments, invalid configuration.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw UsageError(what);
}

inline void require_size(const Vec& v, Eigen::Index n, const char* name) {
  if (v.size() != n)
    throw UsageError(std::string(name) + ": expected " + std::to_string(n) +
                     " entries, got " + std::to_string(v.size()));
}

}  // namespace tarc
