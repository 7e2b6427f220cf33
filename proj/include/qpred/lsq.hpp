#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace qpred {

struct LsqSolution {
  Eigen::VectorXd x;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

/// Minimum-norm least squares via a rank-revealing complete orthogonal
/// decomposition. Rank deficiency is reported, not an error.
inline LsqSolution solve_least_squares(const Eigen::MatrixXd& A,
                                       const Eigen::VectorXd& b) {
  if (A.rows() == 0 || A.cols() == 0)
    throw std::invalid_argument("solve_least_squares: empty system");
  if (A.rows() != b.rows())
    throw std::invalid_argument("solve_least_squares: shape mismatch");
  if (!A.allFinite() || !b.allFinite())
    throw std::invalid_argument("solve_least_squares: non-finite entries");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  LsqSolution s;
  s.x = cod.solve(b);
  s.rank = cod.rank();
  s.rank_deficient = s.rank < A.cols();
  return s;
}

}  // namespace qpred
