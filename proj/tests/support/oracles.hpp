#pragma once

// Reference computations used only by tests. Each is written from the
// defining formula, not from library code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Cox-de Boor recursion for B-spline j of `degree` over `knots` at t.
/// Right-continuous, except that t equal to the last knot belongs to the last span.
inline double cox_de_boor(const std::vector<double>& knots, int j, int degree, double t) {
  const double last = knots.back();
  if (degree == 0) {
    const double a = knots[static_cast<std::size_t>(j)];
    const double b = knots[static_cast<std::size_t>(j) + 1];
    if (a < b && ((t >= a && t < b) || (t == last && b == last))) return 1.0;
    return 0.0;
  }
  double out = 0.0;
  const double a0 = knots[static_cast<std::size_t>(j)];
  const double a1 = knots[static_cast<std::size_t>(j + degree)];
  const double b0 = knots[static_cast<std::size_t>(j + 1)];
  const double b1 = knots[static_cast<std::size_t>(j + degree + 1)];
  if (a1 > a0) out += (t - a0) / (a1 - a0) * cox_de_boor(knots, j, degree - 1, t);
  if (b1 > b0) out += (b1 - t) / (b1 - b0) * cox_de_boor(knots, j + 1, degree - 1, t);
  return out;
}

/// Clamped, equally spaced knot vector.
inline std::vector<double> clamped_knots(double lo, double hi, int num_basis, int degree) {
  std::vector<double> k;
  const int spans = num_basis - degree;
  for (int i = 0; i < degree; ++i) k.push_back(lo);
  for (int i = 0; i <= spans; ++i) k.push_back(i == spans ? hi : lo + (hi - lo) * i / spans);
  for (int i = 0; i < degree; ++i) k.push_back(hi);
  return k;
}

/// Midpoint Riemann sum with m cells.
inline double riemann(const std::function<double(double)>& f, double lo, double hi, long m) {
  const double h = (hi - lo) / static_cast<double>(m);
  double s = 0.0;
  for (long i = 0; i < m; ++i) s += f(lo + (static_cast<double>(i) + 0.5) * h);
  return s * h;
}

/// Second-differencing matrix built entry by entry.
inline Eigen::MatrixXd second_difference(int k) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
  d(0, 0) = 1.0;
  d(k - 1, k - 1) = 1.0;
  for (int r = 1; r + 1 < k; ++r) {
    d(r, r - 1) = 1.0;
    d(r, r) = -2.0;
    d(r, r + 1) = 1.0;
  }
  return d;
}

/// Kolmogorov limiting survival function Q(x) = 2 sum (-1)^{j-1} exp(-2 j^2 x^2).
inline double kolmogorov_q(double x) {
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    s += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample KS p-value with the Stephens small-sample correction.
inline double ks_pvalue(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

/// Two-sample KS p-value (asymptotic with the same correction on n_eff).
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / static_cast<double>(a.size() + b.size());
  const double sn = std::sqrt(ne);
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

/// Fused lasso  n^-1 ||y - A d||^2 + lambda sum |d_{k+1} - d_k|  by projected
/// gradient on the dual box (the prox of its indicator is a clip). Needs A'A
/// invertible.
inline Eigen::VectorXd fused_lasso_dual_pg(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double lambda,
                                           int iters = 200000, double tol = 1e-15) {
  const auto k = a.cols();
  const double n = static_cast<double>(a.rows());
  const Eigen::MatrixXd h = 2.0 / n * a.transpose() * a;
  const Eigen::VectorXd b = 2.0 / n * a.transpose() * y;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k - 1, k);
  for (Eigen::Index r = 0; r + 1 < k; ++r) {
    d(r, r) = -1.0;
    d(r, r + 1) = 1.0;
  }
  const Eigen::LLT<Eigen::MatrixXd> hf(h);
  const Eigen::MatrixXd hinv_dt = hf.solve(d.transpose());
  const Eigen::MatrixXd m = d * hinv_dt;  // Hessian of the dual objective
  const Eigen::VectorXd c = d * hf.solve(b);
  const double step = 1.0 / Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().maxCoeff();
  // dual: minimize 1/2 u'Mu - c'u over |u| <= lambda; delta = H^-1 (b - D'u)
  Eigen::VectorXd u = Eigen::VectorXd::Zero(k - 1);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd next = (u - step * (m * u - c)).cwiseMax(-lambda).cwiseMin(lambda);
    const double change = (next - u).lpNorm<Eigen::Infinity>();
    u = next;
    if (change < tol) break;
  }
  return hf.solve(b - d.transpose() * u);
}

/// Type-7 sample quantile by explicit sorting.
inline double sorted_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracle
