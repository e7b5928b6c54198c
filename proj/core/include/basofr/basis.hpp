#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace basofr {

/// Closed interval [lo, hi] of the functional domain.
struct Domain {
  double lo = 0.0;
  double hi = 1.0;

  [[nodiscard]] double length() const noexcept { return hi - lo; }
  [[nodiscard]] bool valid() const noexcept { return lo < hi; }
  [[nodiscard]] bool contains(double t, double tol = 0.0) const noexcept {
    return t >= lo - tol && t <= hi + tol;
  }
  [[nodiscard]] bool contains(const Domain& other, double tol = 0.0) const noexcept {
    return other.lo >= lo - tol && other.hi <= hi + tol;
  }
  friend bool operator==(const Domain&, const Domain&) = default;
};

/// Equally spaced clamped B-spline system on a domain.
///
/// Knots: the boundary knots are repeated degree+1 times and the
/// size() - degree - 1 interior knots split the domain into equal spans.
class BSplineBasis {
 public:
  BSplineBasis(Domain domain, int num_basis, int degree = 3);

  [[nodiscard]] const Domain& domain() const noexcept { return domain_; }
  [[nodiscard]] int size() const noexcept { return num_basis_; }
  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] int num_spans() const noexcept { return num_basis_ - degree_; }
  [[nodiscard]] int num_interior_knots() const noexcept { return num_basis_ - degree_ - 1; }
  [[nodiscard]] std::span<const double> knots() const noexcept { return knots_; }

  /// Distinct knot values lo = b_0 < ... < b_S = hi.
  [[nodiscard]] std::vector<double> breakpoints() const;

  /// Support [knot_j, knot_{j+degree+1}] of basis function j.
  [[nodiscard]] Domain support(int j) const;

  /// Evaluates the degree+1 functions that may be nonzero at t.
  /// Writes them to `values` (size degree+1) and returns the index of the first.
  int eval_nonzero(double t, std::span<double> values) const;

  /// Dense K-vector of basis values at t. Throws std::out_of_range outside the domain.
  [[nodiscard]] Eigen::VectorXd eval(double t) const;

  /// Rows are eval(t) for each t.
  [[nodiscard]] Eigen::MatrixXd eval_matrix(std::span<const double> ts) const;

  /// sum_k coeffs_k psi_k(t)
  [[nodiscard]] double evaluate(const Eigen::VectorXd& coeffs, double t) const;

  friend bool operator==(const BSplineBasis& a, const BSplineBasis& b) {
    return a.domain_ == b.domain_ && a.num_basis_ == b.num_basis_ && a.degree_ == b.degree_;
  }

 private:
  int span_index(double t) const;

  Domain domain_;
  int num_basis_;
  int degree_;
  double span_width_;
  std::vector<double> knots_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(int num_nodes);

/// J[j,k] = integral over `sub` of phi_j(t) psi_k(t) dt.
struct CrossGram {
  Eigen::MatrixXd values;
  Domain domain_of_integration;
};

/// Exact cross-Gram matrix via per-span Gauss-Legendre quadrature. The
/// integration grid is the union of both knot sets clipped to `sub`.
CrossGram cross_gram(const BSplineBasis& basis_x, const BSplineBasis& basis_b, Domain sub);

/// Integrals of each basis function over `sub` (exact).
Eigen::VectorXd basis_integrals(const BSplineBasis& basis, Domain sub);

/// K x K second-differencing matrix: unit first/last rows, (1,-2,1) interior rows
/// with row k (0-based, 1 <= k <= K-2) touching columns k-1, k, k+1.
Eigen::MatrixXd second_diff(int num_basis);

/// (D b)_{1..K-2}: the interior second differences of a coefficient vector.
Eigen::VectorXd interior_second_differences(const Eigen::VectorXd& coeffs);

}  // namespace basofr
