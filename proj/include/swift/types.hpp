#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <string>

namespace swift {

using scalar_t = double;
using index_t = Eigen::Index;
using vector_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, 1>;
using matrix_t = Eigen::Matrix<scalar_t, Eigen::Dynamic, Eigen::Dynamic>;

// Round-trip-exact decimal rendering for CSV output.
inline std::string g17(scalar_t v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/** Tolerance for algebraic identities checked in double precision. */
inline constexpr scalar_t kAlgebraTol = 1e-12;
/** Tolerance for eigenvalue computations. */
inline constexpr scalar_t kEigenTol = 1e-9;

}  // namespace swift
