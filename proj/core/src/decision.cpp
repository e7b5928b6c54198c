#include "basofr/decision.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace basofr {

Domain Partition::cell(int k) const {
  if (k < 0 || k >= size()) throw std::out_of_range("Partition::cell: index out of range");
  return Domain{breaks[static_cast<std::size_t>(k)], breaks[static_cast<std::size_t>(k) + 1]};
}

int Partition::locate(double t) const {
  if (size() < 1 || t < breaks.front() || t > breaks.back()) return -1;
  if (t == breaks.back()) return size() - 1;
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
  return static_cast<int>(it - breaks.begin()) - 1;
}

void Partition::validate() const {
  if (breaks.size() < 2) throw std::invalid_argument("partition needs at least one cell");
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (!std::isfinite(breaks[k]) || !(breaks[k + 1] > breaks[k])) {
      throw std::invalid_argument("partition breakpoints must be finite and strictly increasing");
    }
  }
}

Partition Partition::from_grid(std::vector<double> grid) {
  Partition p{std::move(grid)};
  p.validate();
  return p;
}

Eigen::MatrixXd aggregate(const std::vector<CoefCurve>& curves, const Partition& partition) {
  partition.validate();
  const int k = partition.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(curves.size()), k);
  std::map<std::tuple<const BSplineBasis*, double, double>, Eigen::MatrixXd> cache;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    if (!c.basis) throw std::invalid_argument("aggregate: curve without basis");
    const Domain& dom = c.basis->domain();
    const double tol = 1e-12 * dom.length();
    if (!dom.contains(Domain{partition.breaks.front(), partition.breaks.back()}, tol)) {
      throw std::invalid_argument("aggregate: partition extends outside the curve basis domain");
    }
    const auto key = std::make_tuple(c.basis.get(), c.subject_domain.lo, c.subject_domain.hi);
    auto it = cache.find(key);
    if (it == cache.end()) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c.basis->size(), k);
      for (int j = 0; j < k; ++j) {
        const Domain cell = partition.cell(j);
        const Domain inter{std::max(cell.lo, c.subject_domain.lo), std::min(cell.hi, c.subject_domain.hi)};
        if (inter.valid()) m.col(j) = basis_integrals(*c.basis, inter);
      }
      it = cache.emplace(key, std::move(m)).first;
    }
    out.row(static_cast<Eigen::Index>(i)) = c.coeffs.transpose() * it->second;
  }
  return out;
}

double empirical_mse(const Eigen::VectorXd& delta, const Eigen::VectorXd& adjusted_y, const Eigen::MatrixXd& agg) {
  if (agg.rows() != adjusted_y.size() || agg.cols() != delta.size()) {
    throw std::invalid_argument("empirical_mse: dimension mismatch");
  }
  return (adjusted_y - agg * delta).squaredNorm() / static_cast<double>(adjusted_y.size());
}

SolutionPath decision_path(const Eigen::MatrixXd& agg, const Eigen::VectorXd& targets,
                           const Eigen::VectorXd& adjusted_y, std::size_t max_entries) {
  if (targets.size() != agg.rows() || adjusted_y.size() != agg.rows()) {
    throw std::invalid_argument("decision_path: dimension mismatch");
  }
  const FusedLassoPath fl = fused_lasso_path(agg, targets);
  const auto total = fl.knots.size();
  std::vector<PathEntry> all(total);
  for (std::size_t j = 0; j < total; ++j) {
    all[j].lambda = fl.knots[j].lambda;
    all[j].delta = fl.knots[j].delta;
    all[j].num_levels = count_levels(all[j].delta);
    all[j].empirical_mse = empirical_mse(all[j].delta, adjusted_y, agg);
  }

  SolutionPath path;
  path.rank_deficient = fl.rank_deficient;
  for (std::size_t j = 1; j < total; ++j) {
    if (all[j].num_levels < all[j - 1].num_levels) ++path.level_violations;
  }

  std::set<std::size_t> keep;
  if (total <= std::max<std::size_t>(max_entries, 2)) {
    for (std::size_t j = 0; j < total; ++j) keep.insert(j);
  } else {
    keep.insert(0);
    keep.insert(total - 1);
    std::size_t best = 0;
    for (std::size_t j = 1; j < total; ++j) {
      if (all[j].empirical_mse < all[best].empirical_mse) best = j;
    }
    keep.insert(best);
    // first (largest-lambda) knot at each level count, simplest counts first
    std::map<int, std::size_t> first_at;
    for (std::size_t j = 0; j < total; ++j) first_at.try_emplace(all[j].num_levels, j);
    for (const auto& [levels, j] : first_at) {
      if (keep.size() >= max_entries) break;
      keep.insert(j);
    }
    const std::size_t fill = max_entries > keep.size() ? max_entries - keep.size() : 0;
    for (std::size_t f = 0; f < fill && keep.size() < max_entries; ++f) {
      keep.insert((f + 1) * (total - 1) / (fill + 1));
    }
  }
  for (auto j : keep) path.entries.push_back(std::move(all[j]));
  return path;
}

Eigen::MatrixXd predictive_mse_draws(const SolutionPath& path, const Eigen::MatrixXd& agg,
                                     const Eigen::MatrixXd& adjusted_predictive) {
  if (adjusted_predictive.cols() != agg.rows()) throw std::invalid_argument("predictive_mse_draws: dimension mismatch");
  const auto e = static_cast<Eigen::Index>(path.entries.size());
  const double n = static_cast<double>(agg.rows());
  Eigen::MatrixXd fits(agg.rows(), e);
  for (Eigen::Index j = 0; j < e; ++j) fits.col(j) = agg * path.entries[static_cast<std::size_t>(j)].delta;
  Eigen::MatrixXd out(adjusted_predictive.rows(), e);
  for (Eigen::Index s = 0; s < adjusted_predictive.rows(); ++s) {
    for (Eigen::Index j = 0; j < e; ++j) {
      out(s, j) = (adjusted_predictive.row(s).transpose() - fits.col(j)).squaredNorm() / n;
    }
  }
  return out;
}

Eigen::MatrixXd predictive_mse_draws(const SolutionPath& path, const Eigen::MatrixXd& agg,
                                     const PosteriorDraws& draws, const RegressionDesign& design, Rng& rng) {
  if (agg.rows() != design.n() || draws.b_star.cols() != design.kb()) {
    throw std::invalid_argument("predictive_mse_draws: dimension mismatch");
  }
  const auto e = static_cast<Eigen::Index>(path.entries.size());
  const auto n = design.n();
  const auto k = agg.cols();
  Eigen::MatrixXd deltas(k, e);
  for (Eigen::Index j = 0; j < e; ++j) deltas.col(j) = path.entries[static_cast<std::size_t>(j)].delta;
  // ||r - A d||^2 = r'r - 2 d'A'r + d'A'A d
  const Eigen::MatrixXd gram = agg.transpose() * agg;
  const Eigen::VectorXd quad = (deltas.transpose() * gram * deltas).diagonal();
  Eigen::MatrixXd out(draws.size(), e);
  Eigen::VectorXd r(n);
  for (Eigen::Index s = 0; s < draws.size(); ++s) {
    r.noalias() = design.x_star_star * draws.b_star.row(s).transpose();
    const double sd = std::sqrt(draws.sigma2(s));
    for (Eigen::Index i = 0; i < n; ++i) r(i) += sd * std_normal(rng);
    const double rr = r.squaredNorm();
    const Eigen::VectorXd ar = agg.transpose() * r;
    out.row(s) = ((rr - 2.0 * (deltas.transpose() * ar).array() + quad.array()) / static_cast<double>(n)).transpose();
  }
  return out;
}

AcceptableFamily acceptable_family(const SolutionPath& path, const Eigen::MatrixXd& e_tilde, double epsilon) {
  if (path.entries.empty()) throw std::invalid_argument("acceptable_family: empty path");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("acceptable_family: epsilon outside [0,1]");
  const auto e = static_cast<Eigen::Index>(path.entries.size());
  if (e_tilde.cols() != e || e_tilde.rows() < 1) throw std::invalid_argument("acceptable_family: draw matrix mismatch");

  AcceptableFamily fam;
  for (std::size_t j = 1; j < path.entries.size(); ++j) {
    if (path.entries[j].empirical_mse < path.entries[fam.lambda_min].empirical_mse) fam.lambda_min = j;
  }
  const auto jmin = static_cast<Eigen::Index>(fam.lambda_min);
  const auto s_count = e_tilde.rows();
  fam.d_tilde.resize(s_count, e);
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const double base = e_tilde(s, jmin);
    for (Eigen::Index j = 0; j < e; ++j) {
      fam.d_tilde(s, j) = j == jmin ? 0.0 : 100.0 * (e_tilde(s, j) - base) / base;
    }
  }
  fam.member.assign(path.entries.size(), 0);
  fam.frac_nonpositive.assign(path.entries.size(), 0.0);
  for (Eigen::Index j = 0; j < e; ++j) {
    const auto count = (fam.d_tilde.col(j).array() <= 0.0).count();
    fam.frac_nonpositive[static_cast<std::size_t>(j)] = static_cast<double>(count) / static_cast<double>(s_count);
    fam.member[static_cast<std::size_t>(j)] = static_cast<double>(count) >= epsilon * static_cast<double>(s_count);
  }
  fam.simplest = fam.lambda_min;
  for (std::size_t j = 0; j < path.entries.size(); ++j) {
    if (!fam.member[j]) continue;
    // entries are ordered by decreasing lambda, so the first hit wins ties
    if (path.entries[j].num_levels < path.entries[fam.simplest].num_levels ||
        (path.entries[j].num_levels == path.entries[fam.simplest].num_levels && j < fam.simplest)) {
      fam.simplest = j;
    }
  }
  return fam;
}

double LocallyConstantEstimate::value(double t) const {
  const int k = partition.locate(t);
  if (k < 0) throw std::out_of_range("LocallyConstantEstimate::value: t outside the partition");
  return delta(k);
}

LocallyConstantEstimate make_estimate(const Partition& partition, const Eigen::VectorXd& delta, double lambda,
                                      double tol) {
  partition.validate();
  if (delta.size() != partition.size()) throw std::invalid_argument("make_estimate: level count mismatch");
  LocallyConstantEstimate est{partition, delta, lambda, {}};
  const double t = tol * std::max(1.0, delta.cwiseAbs().maxCoeff());
  for (int k = 0; k < partition.size(); ++k) {
    const Domain c = partition.cell(k);
    if (!est.runs.empty() && std::fabs(delta(k) - est.runs.back().level) <= t) {
      est.runs.back().end = c.hi;
    } else {
      est.runs.push_back({c.lo, c.hi, delta(k)});
    }
  }
  return est;
}

int sign_label(double level, double zero_tol) {
  if (std::fabs(level) <= zero_tol) return 0;
  return level > 0.0 ? 1 : -1;
}

std::vector<Window> extract_windows(const LocallyConstantEstimate& estimate, double zero_tol) {
  std::vector<Window> out;
  double weight = 0.0;
  for (const auto& r : estimate.runs) {
    const int label = sign_label(r.level, zero_tol);
    const double w = r.end - r.start;
    if (!out.empty() && out.back().label == label) {
      auto& b = out.back();
      b.level = (b.level * weight + r.level * w) / (weight + w);
      b.end = r.end;
      weight += w;
    } else {
      out.push_back({r.start, r.end, r.level, label});
      weight = w;
    }
  }
  return out;
}

std::vector<int> grid_labels(const LocallyConstantEstimate& estimate, const std::vector<double>& grid,
                             double zero_tol) {
  std::vector<int> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(sign_label(estimate.value(t), zero_tol));
  return out;
}

std::vector<int> ci_labels(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("ci_labels: size mismatch");
  std::vector<int> out(static_cast<std::size_t>(lo.size()));
  for (Eigen::Index j = 0; j < lo.size(); ++j) out[static_cast<std::size_t>(j)] = lo(j) > 0.0 ? 1 : hi(j) < 0.0 ? -1 : 0;
  return out;
}

std::vector<Window> ci_windows(const std::vector<double>& grid, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                               const Eigen::VectorXd& mean) {
  const auto labels = ci_labels(lo, hi);
  if (grid.size() != labels.size() || mean.size() != lo.size()) throw std::invalid_argument("ci_windows: size mismatch");
  std::vector<Window> out;
  int count = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double m = mean(static_cast<Eigen::Index>(j));
    if (!out.empty() && out.back().label == labels[j]) {
      auto& b = out.back();
      b.end = grid[j];
      b.level = (b.level * count + m) / (count + 1);
      ++count;
    } else {
      out.push_back({grid[j], grid[j], m, labels[j]});
      count = 1;
    }
  }
  return out;
}

DecisionResult decision_analysis(const std::vector<CoefCurve>& curves, const Partition& partition,
                                 const RegressionDesign& design, const PosteriorDraws& draws,
                                 const DecisionOptions& options) {
  if (draws.size() < 1) throw std::invalid_argument("decision_analysis: no posterior draws");
  if (static_cast<Eigen::Index>(curves.size()) != design.n()) {
    throw std::invalid_argument("decision_analysis: curves and design have different subject counts");
  }
  DecisionResult res;
  res.agg = aggregate(curves, partition);

  // Covariate adjustment uses posterior means of the scalar and additive terms.
  const Eigen::VectorXd alpha_bar = draws.alpha.colwise().mean().transpose();
  Eigen::VectorXd adjusted = design.y - design.z * alpha_bar;
  for (std::size_t j = 0; j < design.splines.size(); ++j) {
    adjusted -= design.splines[j].values * draws.spline_coefs[j].colwise().mean().transpose();
  }
  const Eigen::VectorXd targets = design.x_star_star * draws.b_star.colwise().mean().transpose();

  res.path = decision_path(res.agg, targets, adjusted, options.max_entries);
  Rng rng = make_rng(options.seed, {0x7072656469637469ULL});
  const Eigen::MatrixXd e_tilde = predictive_mse_draws(res.path, res.agg, draws, design, rng);
  res.family = acceptable_family(res.path, e_tilde, options.epsilon);
  const auto& chosen = res.path.entries[res.family.simplest];
  res.estimate = make_estimate(partition, chosen.delta, chosen.lambda);
  res.windows = extract_windows(res.estimate, options.zero_tol);
  return res;
}

}  // namespace basofr
