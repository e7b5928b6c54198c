#include "basofr/fused_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace basofr {

namespace {

struct Transformed {
  Eigen::MatrixXd r;        // K x K upper triangular
  Eigen::VectorXd ytil;     // Q'y
  Eigen::MatrixXd dtil;     // D R^{-1}, (K-1) x K
};

// delta = M c for the groups separated by boundary indices; solves the
// group-restricted stationarity system at dual scale lam.
Eigen::VectorXd group_solution(const Transformed& tr, const std::vector<char>& in_b, const Eigen::VectorXd& sign,
                               double lam) {
  const auto k = tr.r.cols();
  std::vector<Eigen::Index> start{0};
  for (Eigen::Index i = 0; i + 1 < k; ++i) {
    if (in_b[static_cast<std::size_t>(i)]) start.push_back(i + 1);
  }
  const auto g = static_cast<Eigen::Index>(start.size());
  Eigen::MatrixXd rm = Eigen::MatrixXd::Zero(k, g);
  Eigen::VectorXd sg(g);
  for (Eigen::Index j = 0; j < g; ++j) {
    const Eigen::Index lo = start[static_cast<std::size_t>(j)];
    const Eigen::Index hi = j + 1 < g ? start[static_cast<std::size_t>(j + 1)] - 1 : k - 1;
    rm.col(j) = tr.r.middleCols(lo, hi - lo + 1).rowwise().sum();
    sg(j) = (lo > 0 ? sign(lo - 1) : 0.0) - (hi < k - 1 ? sign(hi) : 0.0);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rm);
  const Eigen::MatrixXd r1 = qr.matrixQR().topRows(g).triangularView<Eigen::Upper>();
  const Eigen::VectorXd qty = (qr.householderQ().adjoint() * tr.ytil).head(g);
  const Eigen::VectorXd w = r1.transpose().triangularView<Eigen::Lower>().solve(sg);
  const Eigen::VectorXd c = r1.triangularView<Eigen::Upper>().solve(qty - lam * w);
  Eigen::VectorXd delta(k);
  for (Eigen::Index j = 0; j < g; ++j) {
    const Eigen::Index lo = start[static_cast<std::size_t>(j)];
    const Eigen::Index hi = j + 1 < g ? start[static_cast<std::size_t>(j + 1)] - 1 : k - 1;
    delta.segment(lo, hi - lo + 1).setConstant(c(j));
  }
  return delta;
}

}  // namespace

FusedLassoPath fused_lasso_path(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  const auto n = a.rows();
  const auto k = a.cols();
  if (k < 2) throw std::invalid_argument("fused_lasso_path: need at least two coefficients");
  if (y.size() != n || n < 1) throw std::invalid_argument("fused_lasso_path: response length mismatch");
  if (!a.allFinite() || !y.allFinite()) throw std::invalid_argument("fused_lasso_path: non-finite input");

  FusedLassoPath path;
  path.n = n;
  Eigen::MatrixXd aw = a;
  Eigen::VectorXd yw = y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(a);
  if (n < k || rank_check.rank() < k) {
    path.rank_deficient = true;
    // genlasso's default; a much smaller ridge leaves the low-lambda path
    // free to drift along the null space of a
    path.ridge = 1e-4;
    aw.resize(n + k, k);
    aw.topRows(n) = a;
    aw.bottomRows(k) = std::sqrt(path.ridge) * Eigen::MatrixXd::Identity(k, k);
    yw = Eigen::VectorXd::Zero(n + k);
    yw.head(n) = y;
  }

  Transformed tr;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(aw);
  tr.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  tr.ytil = (qr.householderQ().adjoint() * yw).head(k);
  const auto m = k - 1;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    d(i, i) = -1.0;
    d(i, i + 1) = 1.0;
  }
  tr.dtil = tr.r.transpose().triangularView<Eigen::Lower>().solve(d.transpose()).transpose();

  std::vector<char> in_b(static_cast<std::size_t>(m), 0);
  Eigen::VectorXd sign = Eigen::VectorXd::Zero(m);
  double lam = std::numeric_limits<double>::infinity();
  Eigen::Index last_coord = -1;
  const double scale = 2.0 / static_cast<double>(n);
  const long max_steps = 50L * k + 100;

  for (long step = 0; step < max_steps; ++step) {
    std::vector<Eigen::Index> interior;
    std::vector<Eigen::Index> boundary;
    for (Eigen::Index i = 0; i < m; ++i) (in_b[static_cast<std::size_t>(i)] ? boundary : interior).push_back(i);
    const auto ni = static_cast<Eigen::Index>(interior.size());

    Eigen::VectorXd dbs = Eigen::VectorXd::Zero(k);
    for (auto i : boundary) dbs += sign(i) * tr.dtil.row(i).transpose();
    Eigen::VectorXd ua = Eigen::VectorXd::Zero(ni);
    Eigen::VectorXd ub = Eigen::VectorXd::Zero(ni);
    Eigen::VectorXd ra = tr.ytil;
    Eigen::VectorXd rb = dbs;
    if (ni > 0) {
      Eigen::MatrixXd di(k, ni);
      for (Eigen::Index j = 0; j < ni; ++j) di.col(j) = tr.dtil.row(interior[static_cast<std::size_t>(j)]).transpose();
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qi(di);
      ua = qi.solve(tr.ytil);
      ub = qi.solve(dbs);
      ra -= di * ua;
      rb -= di * ub;
    }

    double next = 0.0;
    Eigen::Index coord = -1;
    bool hit = false;
    const double cap = std::isinf(lam) ? lam : lam * (1.0 + 1e-9);
    for (Eigen::Index j = 0; j < ni; ++j) {
      const auto i = interior[static_cast<std::size_t>(j)];
      for (double denom : {ub(j) + 1.0, ub(j) - 1.0}) {
        if (denom == 0.0) continue;
        const double t = ua(j) / denom;
        if (!(t > 0.0) || t > cap) continue;
        if (i == last_coord && t > lam * (1.0 - 1e-9)) continue;
        if (t > next) {
          next = t;
          coord = i;
          hit = true;
        }
      }
    }
    for (auto i : boundary) {
      const double c = sign(i) * tr.dtil.row(i).dot(ra);
      const double dd = sign(i) * tr.dtil.row(i).dot(rb);
      if (!(c < 0.0 && dd < 0.0)) continue;
      const double t = c / dd;
      if (t > cap) continue;
      if (i == last_coord && t > lam * (1.0 - 1e-9)) continue;
      if (t > next) {
        next = t;
        coord = i;
        hit = false;
      }
    }

    FusedLassoKnot knot;
    knot.lambda = scale * next;
    knot.delta = group_solution(tr, in_b, sign, next);
    knot.subgradient = sign;
    for (Eigen::Index j = 0; j < ni; ++j) {
      const auto i = interior[static_cast<std::size_t>(j)];
      knot.subgradient(i) = next > 0.0 ? (ua(j) - next * ub(j)) / next : 0.0;
    }
    for (auto i : boundary) {
      knot.boundary.push_back(static_cast<int>(i));
      knot.signs.push_back(sign(i) > 0 ? 1 : -1);
    }
    if (path.knots.empty() || knot.lambda < path.knots.back().lambda) {
      path.knots.push_back(std::move(knot));
    } else {
      path.knots.back() = std::move(knot);  // coincident event: keep the later active set
    }
    if (coord < 0 || next <= 0.0) break;

    if (hit) {
      const auto j = std::find(interior.begin(), interior.end(), coord) - interior.begin();
      in_b[static_cast<std::size_t>(coord)] = 1;
      sign(coord) = ua(j) - next * ub(j) > 0.0 ? 1.0 : -1.0;
    } else {
      in_b[static_cast<std::size_t>(coord)] = 0;
      sign(coord) = 0.0;
    }
    last_coord = coord;
    lam = next;
  }
  if (path.knots.back().lambda != 0.0) {
    throw std::runtime_error("fused_lasso_path: path did not reach lambda = 0");
  }
  return path;
}

Eigen::VectorXd FusedLassoPath::solution(double lambda) const {
  if (knots.empty()) throw std::logic_error("FusedLassoPath::solution: empty path");
  if (lambda < 0.0) throw std::invalid_argument("FusedLassoPath::solution: negative lambda");
  if (lambda >= knots.front().lambda) return knots.front().delta;
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    const auto& hi = knots[j];
    const auto& lo = knots[j + 1];
    if (lambda <= hi.lambda && lambda >= lo.lambda) {
      const double w = (lambda - lo.lambda) / (hi.lambda - lo.lambda);
      return w * hi.delta + (1.0 - w) * lo.delta;
    }
  }
  return knots.back().delta;
}

double fused_lasso_kkt_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& delta,
                                double lambda, double fuse_tol) {
  const auto n = static_cast<double>(a.rows());
  const Eigen::VectorXd g = (2.0 / n) * a.transpose() * (y - a * delta);
  if (lambda <= 0.0) return g.cwiseAbs().maxCoeff();
  const double tol = fuse_tol * std::max(1.0, delta.cwiseAbs().maxCoeff());
  double worst = std::fabs(g.sum());
  double cum = 0.0;
  for (Eigen::Index k = 0; k + 1 < delta.size(); ++k) {
    cum += g(k);
    const double v = -cum / lambda;
    const double jump = delta(k + 1) - delta(k);
    const double viol = std::fabs(jump) > tol ? std::fabs(v - (jump > 0 ? 1.0 : -1.0)) : std::max(std::fabs(v) - 1.0, 0.0);
    worst = std::max(worst, lambda * viol);
  }
  return worst;
}

int count_levels(const Eigen::VectorXd& delta, double tol) {
  if (delta.size() == 0) return 0;
  const double t = tol * std::max(1.0, delta.cwiseAbs().maxCoeff());
  int levels = 1;
  for (Eigen::Index k = 0; k + 1 < delta.size(); ++k) {
    if (std::fabs(delta(k + 1) - delta(k)) > t) ++levels;
  }
  return levels;
}

}  // namespace basofr
