#include "basofr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <tuple>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "basofr/errors.hpp"

namespace basofr {

double true_beta_smooth(double t) {
  return 8.0 / (2.0 + std::exp(20.0 - 60.0 * t) + std::exp(60.0 * t - 20.0)) -
         12.0 / (2.0 + std::exp(40.0 - 60.0 * t) + std::exp(60.0 * t - 40.0));
}

void Truth::validate() const {
  if (kind == Kind::Smooth) return;
  if (levels.size() != breakpoints.size() + 1) {
    throw std::invalid_argument("locally constant truth needs one more level than breakpoints");
  }
  for (std::size_t j = 0; j < breakpoints.size(); ++j) {
    if (!std::isfinite(breakpoints[j]) || (j > 0 && !(breakpoints[j] > breakpoints[j - 1]))) {
      throw std::invalid_argument("truth breakpoints must be finite and strictly increasing");
    }
  }
  for (double l : levels) {
    if (!std::isfinite(l)) throw std::invalid_argument("truth levels must be finite");
  }
}

double Truth::operator()(double t) const {
  if (kind == Kind::Smooth) return true_beta_smooth(t);
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  return levels[static_cast<std::size_t>(it - breakpoints.begin())];
}

std::string Truth::describe() const {
  if (kind == Kind::Smooth) return "smooth";
  std::ostringstream os;
  os << "locally-constant levels=";
  for (std::size_t j = 0; j < levels.size(); ++j) os << (j ? "," : "") << levels[j];
  os << " breakpoints=";
  for (std::size_t j = 0; j < breakpoints.size(); ++j) os << (j ? "," : "") << breakpoints[j];
  return os.str();
}

std::vector<double> regular_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo)) throw std::invalid_argument("regular_grid: need lo < hi and step > 0");
  const auto m = static_cast<long>(std::llround((hi - lo) / step));
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(m) + 1);
  for (long j = 0; j <= m; ++j) g.push_back(j == m ? hi : lo + static_cast<double>(j) * step);
  return g;
}

std::vector<double> SimulationDesign::resolved_grid() const { return grid.empty() ? regular_grid(0.0, 1.0, 0.01) : grid; }

void SimulationDesign::validate() const {
  if (n < 2) throw ConfigError("simulation needs n >= 2");
  if (!(snr > 0.0)) throw ConfigError("snr must be positive");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (!(gp.sigma_x >= 0.0) || !(gp.length_scale > 0.0) || !(gp.period > 0.0)) {
    throw ConfigError("GP parameters must be positive (sigma_x may be 0)");
  }
  const auto g = resolved_grid();
  if (g.size() < 2) throw ConfigError("grid needs at least two points");
  for (std::size_t j = 1; j < g.size(); ++j) {
    if (!(g[j] > g[j - 1])) throw ConfigError("grid must be strictly increasing");
  }
  try {
    truth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<CurveObservation> gen_curves(const SimulationDesign& design, Rng& rng) {
  design.validate();
  const auto grid = design.resolved_grid();
  const auto m = static_cast<Eigen::Index>(grid.size());
  const double s2 = design.gp.sigma_x * design.gp.sigma_x;
  const double l2 = design.gp.length_scale * design.gp.length_scale;

  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(m, m);
  if (s2 > 0.0) {
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        const double d = grid[static_cast<std::size_t>(a)] - grid[static_cast<std::size_t>(b)];
        k(a, b) = s2 * std::exp(-0.5 * d * d / l2);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
      k.diagonal().array() += 1e-8;
      llt.compute(k);
      if (llt.info() != Eigen::Success) throw NumericalError("GP kernel matrix is not positive definite");
    }
    chol = llt.matrixL();
  }

  const Domain dom{grid.front(), grid.back()};
  std::vector<CurveObservation> out;
  out.reserve(static_cast<std::size_t>(design.n));
  Eigen::VectorXd z(m);
  char id[32];
  for (int i = 0; i < design.n; ++i) {
    const double phase = design.gp.seasonal ? uniform01(rng) : 0.0;
    for (Eigen::Index j = 0; j < m; ++j) z(j) = std_normal(rng);
    const Eigen::VectorXd dev = chol * z;
    CurveObservation c;
    std::snprintf(id, sizeof id, "s%06d", i + 1);
    c.subject_id = id;
    c.t = grid;
    c.x.resize(grid.size());
    for (Eigen::Index j = 0; j < m; ++j) {
      const double t = grid[static_cast<std::size_t>(j)];
      const double mu = design.gp.seasonal ? std::sin(2.0 * std::numbers::pi * t / design.gp.period + phase) : 0.0;
      c.x[static_cast<std::size_t>(j)] = mu + dev(j);
    }
    c.subject_domain = dom;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<double> true_signal(const std::vector<CoefCurve>& curves, const Truth& truth,
                                const BSplineBasis& beta_basis) {
  truth.validate();
  std::vector<double> out;
  out.reserve(curves.size());
  if (truth.kind == Truth::Kind::Smooth) {
    const Domain& d = beta_basis.domain();
    const auto fine = regular_grid(d.lo, d.hi, d.length() / 4000.0);
    const Eigen::MatrixXd phi = beta_basis.eval_matrix(fine);
    Eigen::VectorXd target(static_cast<Eigen::Index>(fine.size()));
    for (std::size_t j = 0; j < fine.size(); ++j) target(static_cast<Eigen::Index>(j)) = truth(fine[j]);
    const Eigen::VectorXd beta_star = phi.colPivHouseholderQr().solve(target);
    std::map<std::tuple<const BSplineBasis*, double, double>, Eigen::VectorXd> cache;
    for (const auto& c : curves) {
      const auto key = std::make_tuple(c.basis.get(), c.subject_domain.lo, c.subject_domain.hi);
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache.emplace(key, cross_gram(*c.basis, beta_basis, c.subject_domain).values * beta_star).first;
      }
      out.push_back(c.coeffs.dot(it->second));
    }
    return out;
  }

  for (const auto& c : curves) {
    std::vector<double> cuts{c.subject_domain.lo};
    for (double b : truth.breakpoints) {
      if (b > c.subject_domain.lo && b < c.subject_domain.hi) cuts.push_back(b);
    }
    cuts.push_back(c.subject_domain.hi);
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
      const double level = truth(0.5 * (cuts[j] + cuts[j + 1]));
      if (level != 0.0) s += level * c.coeffs.dot(basis_integrals(*c.basis, Domain{cuts[j], cuts[j + 1]}));
    }
    out.push_back(s);
  }
  return out;
}

std::vector<double> trapezoid_signal(const std::vector<CurveObservation>& curves, const Truth& truth) {
  std::vector<double> out;
  out.reserve(curves.size());
  for (const auto& c : curves) {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < c.t.size(); ++j) {
      s += 0.5 * (c.t[j + 1] - c.t[j]) * (c.x[j] * truth(c.t[j]) + c.x[j + 1] * truth(c.t[j + 1]));
    }
    out.push_back(s);
  }
  return out;
}

SimulatedResponses gen_responses(const std::vector<double>& signal, double snr, Rng& rng) {
  if (!(snr > 0.0)) throw std::invalid_argument("gen_responses: snr must be positive");
  if (signal.size() < 2) throw std::invalid_argument("gen_responses: need at least two subjects");
  const double n = static_cast<double>(signal.size());
  double mean = 0.0;
  for (double s : signal) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : signal) var += (s - mean) * (s - mean);
  var /= n - 1.0;
  if (!(var > 1e-300) || !std::isfinite(var)) {
    throw std::invalid_argument("gen_responses: the signal has no variation (degenerate truth)");
  }
  SimulatedResponses r;
  r.sigma = std::isinf(snr) ? 0.0 : std::sqrt(var / snr);
  r.y.reserve(signal.size());
  for (double s : signal) r.y.push_back(s + r.sigma * std_normal(rng));
  return r;
}

double l2_distance(const std::vector<double>& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    const double d0 = a(i) - b(i);
    const double d1 = a(i + 1) - b(i + 1);
    s += 0.5 * (grid[j + 1] - grid[j]) * (d0 * d0 + d1 * d1);
  }
  return std::sqrt(s);
}

EvalMetrics evaluate(const std::vector<double>& grid, const Eigen::VectorXd& estimate, const Eigen::VectorXd& lo95,
                     const Eigen::VectorXd& hi95, const Eigen::VectorXd& truth, const std::vector<int>& labels) {
  const auto g = static_cast<Eigen::Index>(grid.size());
  if (estimate.size() != g || lo95.size() != g || hi95.size() != g || truth.size() != g ||
      static_cast<Eigen::Index>(labels.size()) != g) {
    throw std::invalid_argument("evaluate: inputs are not on a common grid");
  }
  EvalMetrics m;
  m.l2_error = l2_distance(grid, estimate, truth);
  double width = 0.0;
  int covered = 0;
  int pos = 0;
  int neg = 0;
  int tp = 0;
  int tn = 0;
  for (Eigen::Index j = 0; j < g; ++j) {
    const double w = hi95(j) - lo95(j);
    if (std::isinf(w)) m.infinite_width = true;
    width += w;
    if (truth(j) >= lo95(j) && truth(j) <= hi95(j)) ++covered;
    const int label = labels[static_cast<std::size_t>(j)];
    if (truth(j) > 0.0) {
      ++pos;
      if (label > 0) ++tp;
    } else if (truth(j) < 0.0) {
      ++neg;
      if (label < 0) ++tn;
    }
  }
  m.mean_ci_width = width / static_cast<double>(g);
  m.pointwise_coverage = static_cast<double>(covered) / static_cast<double>(g);
  m.tpr = pos > 0 ? static_cast<double>(tp) / pos : std::numeric_limits<double>::quiet_NaN();
  m.tnr = neg > 0 ? static_cast<double>(tn) / neg : std::numeric_limits<double>::quiet_NaN();
  return m;
}

}  // namespace basofr
