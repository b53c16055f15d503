#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mpglab/errors.hpp"

namespace mpg {

inline constexpr double kSolveResidualTol = 1e-10;

// Solves A x = b (A square, row-major flat) by dense LU with iterative
// refinement until the max-norm residual is <= tol. The systems solved here
// are Id - delta * P with P substochastic, hence strictly diagonally
// dominant and well conditioned; refinement virtually never triggers.
inline std::vector<double> solve_certified(const std::vector<double>& a_flat,
                                           const std::vector<double>& b_flat,
                                           double tol = kSolveResidualTol) {
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(b_flat.size());
  Eigen::Map<const RowMajor> a(a_flat.data(), n, n);
  Eigen::Map<const Eigen::VectorXd> b(b_flat.data(), n);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = lu.solve(b);
  for (int pass = 0; pass < 4; ++pass) {
    Eigen::VectorXd r = b - a * x;
    if (r.lpNorm<Eigen::Infinity>() <= tol)
      return {x.data(), x.data() + n};
    x += lu.solve(r);
  }
  Eigen::VectorXd r = b - a * x;
  if (r.lpNorm<Eigen::Infinity>() > tol)
    throw NumericsError("dense solve: residual above tolerance");
  return {x.data(), x.data() + n};
}

}  // namespace mpg
