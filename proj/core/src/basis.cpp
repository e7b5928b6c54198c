#include "basofr/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace basofr {

BSplineBasis::BSplineBasis(Domain domain, int num_basis, int degree)
    : domain_(domain), num_basis_(num_basis), degree_(degree) {
  if (!std::isfinite(domain.lo) || !std::isfinite(domain.hi) || !domain.valid()) {
    throw std::invalid_argument("BSplineBasis: degenerate domain");
  }
  if (degree < 0 || degree > 20) throw std::invalid_argument("BSplineBasis: degree must be in [0, 20]");
  if (num_basis < degree + 1) {
    throw std::invalid_argument("BSplineBasis: need at least degree+1 = " +
                                std::to_string(degree + 1) + " basis functions, got " +
                                std::to_string(num_basis));
  }
  const int spans = num_basis - degree;
  span_width_ = domain.length() / spans;
  knots_.reserve(static_cast<std::size_t>(num_basis + degree + 1));
  for (int i = 0; i <= degree; ++i) knots_.push_back(domain.lo);
  for (int i = 1; i < spans; ++i) knots_.push_back(domain.lo + i * span_width_);
  for (int i = 0; i <= degree; ++i) knots_.push_back(domain.hi);
}

std::vector<double> BSplineBasis::breakpoints() const {
  std::vector<double> b(knots_.begin() + degree_, knots_.end() - degree_);
  return b;
}

Domain BSplineBasis::support(int j) const {
  return {knots_[static_cast<std::size_t>(j)],
          knots_[static_cast<std::size_t>(j + degree_ + 1)]};
}

int BSplineBasis::span_index(double t) const {
  const int spans = num_spans();
  int j = static_cast<int>(std::floor((t - domain_.lo) / span_width_));
  j = std::clamp(j, 0, spans - 1);
  return j + degree_;
}

int BSplineBasis::eval_nonzero(double t, std::span<double> values) const {
  const double tol = 1e-12 * domain_.length();
  if (!(t >= domain_.lo - tol && t <= domain_.hi + tol)) {
    throw std::out_of_range("BSplineBasis: t = " + std::to_string(t) + " outside [" +
                            std::to_string(domain_.lo) + ", " + std::to_string(domain_.hi) +
                            "]");
  }
  t = std::clamp(t, domain_.lo, domain_.hi);
  const int s = span_index(t);
  const int p = degree_;
  // Cox-de Boor triangle (de Boor, A Practical Guide to Splines, BSPLVB).
  double left[32];
  double right[32];
  values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots_[static_cast<std::size_t>(s + 1 - j)];
    right[j] = knots_[static_cast<std::size_t>(s + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[static_cast<std::size_t>(r)] / (right[r + 1] + left[j - r]);
      values[static_cast<std::size_t>(r)] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[static_cast<std::size_t>(j)] = saved;
  }
  return s - p;
}

Eigen::VectorXd BSplineBasis::eval(double t) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_basis_);
  double vals[32];
  const int first = eval_nonzero(t, std::span<double>(vals, static_cast<std::size_t>(degree_ + 1)));
  for (int r = 0; r <= degree_; ++r) out(first + r) = vals[r];
  return out;
}

Eigen::MatrixXd BSplineBasis::eval_matrix(std::span<const double> ts) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ts.size()), num_basis_);
  double vals[32];
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int first =
        eval_nonzero(ts[i], std::span<double>(vals, static_cast<std::size_t>(degree_ + 1)));
    for (int r = 0; r <= degree_; ++r) out(static_cast<Eigen::Index>(i), first + r) = vals[r];
  }
  return out;
}

double BSplineBasis::evaluate(const Eigen::VectorXd& coeffs, double t) const {
  double vals[32];
  const int first = eval_nonzero(t, std::span<double>(vals, static_cast<std::size_t>(degree_ + 1)));
  double s = 0.0;
  for (int r = 0; r <= degree_; ++r) s += coeffs(first + r) * vals[r];
  return s;
}

GaussLegendreRule gauss_legendre(int num_nodes) {
  if (num_nodes < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  GaussLegendreRule rule;
  const int n = num_nodes;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

namespace {

std::vector<double> integration_breaks(const std::vector<const BSplineBasis*>& bases, Domain sub) {
  std::vector<double> pts{sub.lo, sub.hi};
  for (const auto* b : bases) {
    for (double k : b->breakpoints()) {
      if (k > sub.lo && k < sub.hi) pts.push_back(k);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

void require_inside(const BSplineBasis& b, Domain sub, const char* what) {
  if (!sub.valid()) throw std::invalid_argument(std::string(what) + ": empty integration domain");
  const double tol = 1e-12 * b.domain().length();
  if (!b.domain().contains(sub, tol)) {
    throw std::out_of_range(std::string(what) + ": integration domain outside basis domain");
  }
}

}  // namespace

CrossGram cross_gram(const BSplineBasis& basis_x, const BSplineBasis& basis_b, Domain sub) {
  require_inside(basis_x, sub, "cross_gram");
  require_inside(basis_b, sub, "cross_gram");
  sub.lo = std::max({sub.lo, basis_x.domain().lo, basis_b.domain().lo});
  sub.hi = std::min({sub.hi, basis_x.domain().hi, basis_b.domain().hi});

  const int px = basis_x.degree();
  const int pb = basis_b.degree();
  // max(px,pb)+1 nodes integrate polynomials of degree 2*max+1 >= px+pb exactly.
  const auto rule = gauss_legendre(std::max(px, pb) + 1);
  const auto breaks = integration_breaks({&basis_x, &basis_b}, sub);

  CrossGram out;
  out.domain_of_integration = sub;
  out.values = Eigen::MatrixXd::Zero(basis_x.size(), basis_b.size());
  double vx[32];
  double vb[32];
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s];
    const double b = breaks[s + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = mid + half * rule.nodes[q];
      const double w = half * rule.weights[q];
      const int fx = basis_x.eval_nonzero(t, std::span<double>(vx, static_cast<std::size_t>(px + 1)));
      const int fb = basis_b.eval_nonzero(t, std::span<double>(vb, static_cast<std::size_t>(pb + 1)));
      for (int i = 0; i <= px; ++i) {
        const double wi = w * vx[i];
        for (int k = 0; k <= pb; ++k) out.values(fx + i, fb + k) += wi * vb[k];
      }
    }
  }
  return out;
}

Eigen::VectorXd basis_integrals(const BSplineBasis& basis, Domain sub) {
  require_inside(basis, sub, "basis_integrals");
  sub.lo = std::max(sub.lo, basis.domain().lo);
  sub.hi = std::min(sub.hi, basis.domain().hi);
  const int p = basis.degree();
  const auto rule = gauss_legendre(p / 2 + 1);
  const auto breaks = integration_breaks({&basis}, sub);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.size());
  double v[32];
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double half = 0.5 * (breaks[s + 1] - breaks[s]);
    const double mid = 0.5 * (breaks[s + 1] + breaks[s]);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = mid + half * rule.nodes[q];
      const int f = basis.eval_nonzero(t, std::span<double>(v, static_cast<std::size_t>(p + 1)));
      for (int i = 0; i <= p; ++i) out(f + i) += half * rule.weights[q] * v[i];
    }
  }
  return out;
}

Eigen::MatrixXd second_diff(int num_basis) {
  if (num_basis < 3) throw std::invalid_argument("second_diff: need K >= 3");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(num_basis, num_basis);
  d(0, 0) = 1.0;
  for (int k = 1; k + 1 < num_basis; ++k) {
    d(k, k - 1) = 1.0;
    d(k, k) = -2.0;
    d(k, k + 1) = 1.0;
  }
  d(num_basis - 1, num_basis - 1) = 1.0;
  return d;
}

Eigen::VectorXd interior_second_differences(const Eigen::VectorXd& coeffs) {
  const Eigen::Index k = coeffs.size();
  if (k < 3) throw std::invalid_argument("interior_second_differences: need K >= 3");
  Eigen::VectorXd d2(k - 2);
  for (Eigen::Index i = 1; i + 1 < k; ++i) d2(i - 1) = coeffs(i - 1) - 2.0 * coeffs(i) + coeffs(i + 1);
  return d2;
}

}  // namespace basofr
