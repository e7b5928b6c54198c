#pragma once

#include <vector>

#include <Eigen/Dense>

namespace basofr {

/// One knot of the solution path of
///   minimize  n^-1 ||y - A delta||^2 + lambda * sum_k |delta_{k+1} - delta_k|.
struct FusedLassoKnot {
  double lambda = 0.0;
  Eigen::VectorXd delta;
  std::vector<int> boundary;  // difference indices k (delta_{k+1} - delta_k) free to be nonzero
  std::vector<int> signs;     // sign of the subgradient on each boundary index
  Eigen::VectorXd subgradient;  // K-1 entries in [-1, 1]
};

struct FusedLassoPath {
  std::vector<FusedLassoKnot> knots;  // lambda strictly decreasing, ending at lambda = 0
  bool rank_deficient = false;        // A lacked full column rank; a tiny ridge was added
  double ridge = 0.0;
  long n = 0;

  /// Solution at any lambda >= 0 by linear interpolation between knots
  /// (exact: the path is piecewise linear). Above the first knot the
  /// solution is the fully fused one.
  [[nodiscard]] Eigen::VectorXd solution(double lambda) const;
};

/// Dual path algorithm on the QR-transformed problem. Requires K >= 2 and
/// finite inputs.
FusedLassoPath fused_lasso_path(const Eigen::MatrixXd& a, const Eigen::VectorXd& y);

/// Largest violation of the optimality conditions at (delta, lambda), in
/// gradient units. Differences below `fuse_tol` (relative to max |delta|)
/// count as fused.
double fused_lasso_kkt_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& delta,
                                double lambda, double fuse_tol = 1e-9);

/// Number of distinct consecutive levels (runs) of delta.
int count_levels(const Eigen::VectorXd& delta, double tol = 1e-9);

}  // namespace basofr
