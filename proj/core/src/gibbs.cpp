#include "basofr/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "basofr/errors.hpp"
#include "basofr/stats.hpp"

namespace basofr {

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::Dhs: return "dhs";
    case PriorKind::GlobalPspline: return "pspline";
    case PriorKind::LocalPspline: return "local-pspline";
  }
  return "?";
}

PriorKind parse_prior_kind(const std::string& text) {
  if (text == "dhs") return PriorKind::Dhs;
  if (text == "pspline") return PriorKind::GlobalPspline;
  if (text == "local-pspline") return PriorKind::LocalPspline;
  throw ConfigError("unknown prior '" + text + "' (expected dhs, pspline or local-pspline)");
}

void FitConfig::validate() const {
  if (mcmc.burnin < 1 || mcmc.draws < 1 || mcmc.thin < 1) {
    throw ConfigError("burnin, draws and thin must all be at least 1");
  }
  const auto& hp = hyper;
  for (double v : {hp.sigma_shape, hp.sigma_rate, hp.alpha_shape, hp.alpha_rate, hp.lambda_shape, hp.lambda_rate}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("gamma hyperparameters must be positive and finite");
  }
  if (!(hp.intercept_variance > 0.0)) throw ConfigError("intercept prior variance must be positive");
  try {
    dhs.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Eigen::VectorXd GaussianConditional::mean() const { return precision.llt().solve(linear); }

Eigen::MatrixXd difference_prior_precision(const Eigen::VectorXd& lambda2, double lambda0) {
  const auto k = lambda2.size() + 2;
  const Eigen::MatrixXd d = second_diff(static_cast<int>(k));
  Eigen::VectorXd inv(k);
  inv(0) = inv(k - 1) = 1.0 / (lambda0 * lambda0);
  inv.segment(1, k - 2) = lambda2.cwiseInverse();
  return d.transpose() * inv.asDiagonal() * d;
}

Eigen::VectorXd sample_gaussian(const GaussianConditional& cond, Rng& rng, const std::string& what) {
  const auto dim = cond.linear.size();
  Eigen::LLT<Eigen::MatrixXd> llt(cond.precision);
  bool ok = llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite();
  if (!ok) {
    Eigen::MatrixXd q = cond.precision;
    const double jitter = 1e-8 * std::fabs(q.trace()) / static_cast<double>(std::max<Eigen::Index>(dim, 1));
    q.diagonal().array() += jitter;
    llt.compute(q);
    ok = llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite();
    if (!ok) {
      throw NumericalError(what + ": precision matrix is not positive definite (dim " + std::to_string(dim) +
                           ", trace " + std::to_string(cond.precision.trace()) + ", jitter " +
                           std::to_string(jitter) + ")");
    }
  }
  Eigen::VectorXd z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z(i) = std_normal(rng);
  // mean = Q^{-1} l, draw = mean + L'^{-1} z
  Eigen::VectorXd w = llt.matrixL().solve(cond.linear) + z;
  return llt.matrixU().solve(w);
}

Eigen::MatrixXd stacked_design(const RegressionDesign& design) {
  Eigen::Index dim = design.kb() + design.p();
  for (const auto& s : design.splines) dim += s.values.cols();
  Eigen::MatrixXd w(design.n(), dim);
  Eigen::Index c = 0;
  w.middleCols(c, design.kb()) = design.x_star_star;
  c += design.kb();
  for (const auto& s : design.splines) {
    w.middleCols(c, s.values.cols()) = s.values;
    c += s.values.cols();
  }
  w.middleCols(c, design.p()) = design.z;
  return w;
}

namespace {

Eigen::VectorXd interior_d2(const Eigen::VectorXd& c) {
  const auto k = c.size();
  Eigen::VectorXd d(k - 2);
  for (Eigen::Index t = 0; t + 2 < k; ++t) d(t) = c(t) - 2.0 * c(t + 1) + c(t + 2);
  return d;
}

Eigen::VectorXd ridge_init(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto k = x.cols();
  const Eigen::MatrixXd d = second_diff(static_cast<int>(k));
  Eigen::MatrixXd q = x.transpose() * x + d.transpose() * d;
  return q.llt().solve(x.transpose() * y);
}

ShrinkageState init_shrinkage(const Eigen::VectorXd& coeffs, const FitConfig& cfg) {
  ShrinkageState s;
  s.dhs = dhs_initialize(interior_d2(coeffs), cfg.dhs);
  s.lambda2 = s.dhs.h.array().exp().matrix();
  s.lambda0 = 1.0;
  return s;
}

}  // namespace

GibbsSampler::GibbsSampler(const RegressionDesign& design, FitConfig config) : config_(std::move(config)) {
  config_.validate();
  kb_ = design.kb();
  if (kb_ < 4) throw std::invalid_argument("GibbsSampler: K_B must be at least 4");
  if (design.p() < 1) throw std::invalid_argument("GibbsSampler: design needs an intercept column");
  if (design.z.rows() != design.n() || design.x_star_star.rows() != design.n()) {
    throw std::invalid_argument("GibbsSampler: inconsistent design row counts");
  }
  w_ = stacked_design(design);
  if (!w_.allFinite()) throw std::invalid_argument("GibbsSampler: non-finite design entries");
  Eigen::Index off = kb_;
  for (const auto& s : design.splines) {
    if (s.values.cols() < 4) throw std::invalid_argument("GibbsSampler: spline blocks need at least 4 columns");
    spline_offsets_.push_back(off);
    spline_sizes_.push_back(s.values.cols());
    off += s.values.cols();
  }
  alpha_offset_ = off;
  penalized_ = design.penalized;
  if (static_cast<Eigen::Index>(penalized_.size()) != design.p()) penalized_.assign(design.p(), true);
  if (!penalized_.empty() && design.p() > 0) penalized_.back() = false;
  gram_ = w_.transpose() * w_;
  set_response(design.y);

  const auto n = design.n();
  const double ybar = n > 0 ? y_.mean() : 0.0;
  state_.sigma2 = n > 1 ? (y_.array() - ybar).square().sum() / static_cast<double>(n - 1) : 1.0;
  if (!(state_.sigma2 > 0.0)) state_.sigma2 = 1.0;
  const Eigen::VectorXd yc = (y_.array() - ybar).matrix();
  state_.b_star = n > 0 ? ridge_init(design.x_star_star, yc) : Eigen::VectorXd::Zero(kb_);
  Eigen::VectorXd resid = yc - design.x_star_star * state_.b_star;
  state_.shrink.push_back(init_shrinkage(state_.b_star, config_));
  for (const auto& s : design.splines) {
    Eigen::VectorXd c = n > 0 ? ridge_init(s.values, resid) : Eigen::VectorXd::Zero(s.values.cols());
    resid -= s.values * c;
    state_.shrink.push_back(init_shrinkage(c, config_));
    state_.spline_coefs.push_back(std::move(c));
  }
  state_.alpha = Eigen::VectorXd::Zero(design.p());
  state_.sigma_j2 = Eigen::VectorXd::Ones(design.p());
  state_.sigma_j2(design.p() - 1) = config_.hyper.intercept_variance;
}

void GibbsSampler::set_response(const Eigen::VectorXd& y) {
  if (y.size() != w_.rows()) throw std::invalid_argument("set_response: length mismatch");
  y_ = y;
  wty_ = w_.transpose() * y_;
}

Eigen::VectorXd GibbsSampler::theta() const {
  Eigen::VectorXd t(w_.cols());
  t.head(kb_) = state_.b_star;
  for (std::size_t j = 0; j < spline_offsets_.size(); ++j) {
    t.segment(spline_offsets_[j], spline_sizes_[j]) = state_.spline_coefs[j];
  }
  t.segment(alpha_offset_, state_.alpha.size()) = state_.alpha;
  return t;
}

double GibbsSampler::ssr() const { return (y_ - w_ * theta()).squaredNorm(); }

GaussianConditional GibbsSampler::block_conditional(Eigen::Index offset, Eigen::Index size,
                                                    const Eigen::MatrixXd& prior_precision) const {
  const Eigen::VectorXd t = theta();
  const double inv_s2 = 1.0 / state_.sigma2;
  GaussianConditional c;
  const auto gbb = gram_.block(offset, offset, size, size);
  c.precision = inv_s2 * gbb + prior_precision;
  // W_b'(y - W_{-b} theta_{-b})
  c.linear = inv_s2 * (wty_.segment(offset, size) - gram_.middleRows(offset, size) * t + gbb * t.segment(offset, size));
  return c;
}

GaussianConditional GibbsSampler::b_star_conditional() const {
  const auto& s = state_.shrink[0];
  return block_conditional(0, kb_, difference_prior_precision(s.lambda2, s.lambda0));
}

GaussianConditional GibbsSampler::spline_conditional(std::size_t block) const {
  const auto& s = state_.shrink.at(block + 1);
  return block_conditional(spline_offsets_.at(block), spline_sizes_[block],
                           difference_prior_precision(s.lambda2, s.lambda0));
}

GaussianConditional GibbsSampler::alpha_conditional() const {
  const auto p = state_.alpha.size();
  Eigen::VectorXd prior(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double v = penalized_[static_cast<std::size_t>(j)] ? state_.sigma_j2(j) : config_.hyper.intercept_variance;
    prior(j) = std::isinf(v) ? 0.0 : 1.0 / v;
  }
  return block_conditional(alpha_offset_, p, prior.asDiagonal().toDenseMatrix());
}

void GibbsSampler::sample_b_star(Rng& rng) { state_.b_star = sample_gaussian(b_star_conditional(), rng, "B*"); }

void GibbsSampler::sample_splines(Rng& rng) {
  for (std::size_t j = 0; j < spline_offsets_.size(); ++j) {
    state_.spline_coefs[j] = sample_gaussian(spline_conditional(j), rng, "spline block " + std::to_string(j));
  }
}

void GibbsSampler::sample_alpha(Rng& rng) { state_.alpha = sample_gaussian(alpha_conditional(), rng, "alpha"); }

void GibbsSampler::update_shrinkage(ShrinkageState& s, const Eigen::VectorXd& coeffs, Rng& rng) {
  const Eigen::VectorXd d2 = interior_d2(coeffs);
  const auto& hp = config_.hyper;
  switch (config_.prior) {
    case PriorKind::Dhs:
      s.dhs.indicators = sample_mixture_indicators(d2, s.dhs.h, rng, config_.dhs.offset);
      sample_log_vols(d2, s.dhs, config_.dhs, rng);
      s.lambda2 = s.dhs.h.array().exp().matrix();
      break;
    case PriorKind::GlobalPspline: {
      const double g = gamma_draw(hp.lambda_shape + 0.5 * static_cast<double>(d2.size()),
                                  hp.lambda_rate + 0.5 * d2.squaredNorm(), rng);
      s.lambda2.setConstant(1.0 / g);
      break;
    }
    case PriorKind::LocalPspline:
      for (Eigen::Index k = 0; k < d2.size(); ++k) {
        s.lambda2(k) = 1.0 / gamma_draw(hp.lambda_shape + 0.5, hp.lambda_rate + 0.5 * d2(k) * d2(k), rng);
      }
      break;
  }
  s.lambda0 = sample_lambda0(coeffs(0), coeffs(coeffs.size() - 1), config_.dhs, rng);
  s.dhs.lambda0 = s.lambda0;
}

void GibbsSampler::sample_scales(Rng& rng) {
  update_shrinkage(state_.shrink[0], state_.b_star, rng);
  for (std::size_t j = 0; j < state_.spline_coefs.size(); ++j) {
    update_shrinkage(state_.shrink[j + 1], state_.spline_coefs[j], rng);
  }
}

void GibbsSampler::sample_ar_params(Rng& rng) {
  if (config_.prior != PriorKind::Dhs) return;
  for (auto& s : state_.shrink) {
    sample_pg_auxiliaries(s.dhs, config_.dhs, rng);
    basofr::sample_ar_params(s.dhs, config_.dhs, rng);
  }
}

GammaParams GibbsSampler::sigma2_conditional() const {
  const auto& hp = config_.hyper;
  return {hp.sigma_shape + 0.5 * static_cast<double>(y_.size()), hp.sigma_rate + 0.5 * ssr()};
}

GammaParams GibbsSampler::sigma_j2_conditional(Eigen::Index j) const {
  if (j < 0 || j >= state_.alpha.size() || !penalized_[static_cast<std::size_t>(j)]) {
    throw std::out_of_range("sigma_j2_conditional: not a penalized scalar effect");
  }
  const double a = state_.alpha(j);
  return {config_.hyper.alpha_shape + 0.5, config_.hyper.alpha_rate + 0.5 * a * a};
}

void GibbsSampler::sample_variances(Rng& rng) {
  const GammaParams s = sigma2_conditional();
  state_.sigma2 = 1.0 / gamma_draw(s.shape, s.rate, rng);
  for (Eigen::Index j = 0; j < state_.alpha.size(); ++j) {
    if (!penalized_[static_cast<std::size_t>(j)]) continue;
    const GammaParams g = sigma_j2_conditional(j);
    state_.sigma_j2(j) = 1.0 / gamma_draw(g.shape, g.rate, rng);
  }
}

void GibbsSampler::sweep(Rng& rng) {
  ++iteration_;
  try {
    sample_b_star(rng);
    sample_splines(rng);
    sample_alpha(rng);
    sample_scales(rng);
    sample_ar_params(rng);
    sample_variances(rng);
  } catch (const NumericalError& e) {
    throw NumericalError("iteration " + std::to_string(iteration_) + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw NumericalError("iteration " + std::to_string(iteration_) + ": " + e.what());
  }
  bool finite = state_.b_star.allFinite() && state_.alpha.allFinite() && std::isfinite(state_.sigma2) &&
                state_.sigma2 > 0.0;
  for (const auto& s : state_.shrink) finite = finite && s.lambda2.allFinite() && std::isfinite(s.lambda0);
  for (const auto& c : state_.spline_coefs) finite = finite && c.allFinite();
  if (!finite) throw NumericalError("non-finite sampler state at iteration " + std::to_string(iteration_));
}

Eigen::MatrixXd PosteriorDraws::stacked() const {
  Eigen::Index dim = b_star.cols() + alpha.cols();
  for (const auto& s : spline_coefs) dim += s.cols();
  Eigen::MatrixXd out(size(), dim);
  Eigen::Index c = 0;
  out.middleCols(c, b_star.cols()) = b_star;
  c += b_star.cols();
  for (const auto& s : spline_coefs) {
    out.middleCols(c, s.cols()) = s;
    c += s.cols();
  }
  out.middleCols(c, alpha.cols()) = alpha;
  return out;
}

PosteriorDraws fit(const RegressionDesign& design, const FitConfig& config, const ProgressFn& progress) {
  GibbsSampler sampler(design, config);
  Rng rng = make_rng(config.seed, {0x6769626273ULL});
  const auto& mc = config.mcmc;
  const long total = static_cast<long>(mc.burnin) + static_cast<long>(mc.draws) * mc.thin;
  const auto s_count = static_cast<Eigen::Index>(mc.draws);
  const auto kb = design.kb();
  const bool dhs = config.prior == PriorKind::Dhs;

  PosteriorDraws out;
  out.prior = config.prior;
  out.seed = config.seed;
  out.b_star.resize(s_count, kb);
  out.alpha.resize(s_count, design.p());
  out.sigma2.resize(s_count);
  out.sigma_j2.resize(s_count, design.p());
  for (const auto& s : design.splines) out.spline_coefs.emplace_back(s_count, s.values.cols());
  out.lambda2.resize(s_count, kb - 2);
  out.lambda0.resize(s_count);
  if (dhs) {
    out.h.resize(s_count, kb - 2);
    out.mu_h.resize(s_count);
    out.phi.resize(s_count);
  }
  Eigen::VectorXd theta_sum = Eigen::VectorXd::Zero(sampler.design_matrix().cols());

  Eigen::Index stored = 0;
  for (long it = 1; it <= total; ++it) {
    sampler.sweep(rng);
    if (progress) progress(it, total);
    if (it <= mc.burnin || (it - mc.burnin) % mc.thin != 0) continue;
    const auto& st = sampler.state();
    out.b_star.row(stored) = st.b_star.transpose();
    out.alpha.row(stored) = st.alpha.transpose();
    out.sigma2(stored) = st.sigma2;
    out.sigma_j2.row(stored) = st.sigma_j2.transpose();
    for (std::size_t j = 0; j < st.spline_coefs.size(); ++j) out.spline_coefs[j].row(stored) = st.spline_coefs[j].transpose();
    out.lambda2.row(stored) = st.shrink[0].lambda2.transpose();
    out.lambda0(stored) = st.shrink[0].lambda0;
    if (dhs) {
      out.h.row(stored) = st.shrink[0].dhs.h.transpose();
      out.mu_h(stored) = st.shrink[0].dhs.mu_h;
      out.phi(stored) = st.shrink[0].dhs.phi;
    }
    theta_sum += sampler.theta();
    ++stored;
  }
  out.fitted_mean = sampler.design_matrix() * (theta_sum / static_cast<double>(stored));
  return out;
}

BetaSummary summarize_beta(const Eigen::MatrixXd& b_star_draws, const BSplineBasis& basis,
                           const std::vector<double>& grid) {
  if (b_star_draws.rows() == 0) throw std::invalid_argument("summarize_beta: no draws");
  if (b_star_draws.cols() != basis.size()) throw std::invalid_argument("summarize_beta: basis size mismatch");
  const Eigen::MatrixXd phi = basis.eval_matrix(grid);
  const Eigen::MatrixXd curves = b_star_draws * phi.transpose();  // draws x grid
  const auto g = static_cast<Eigen::Index>(grid.size());
  BetaSummary out;
  out.grid = grid;
  out.mean = curves.colwise().mean().transpose();
  out.lo50.resize(g);
  out.hi50.resize(g);
  out.lo95.resize(g);
  out.hi95.resize(g);
  std::vector<double> col(static_cast<std::size_t>(curves.rows()));
  for (Eigen::Index j = 0; j < g; ++j) {
    for (Eigen::Index s = 0; s < curves.rows(); ++s) col[static_cast<std::size_t>(s)] = curves(s, j);
    std::sort(col.begin(), col.end());
    out.lo95(j) = quantile_sorted(col, 0.025);
    out.lo50(j) = quantile_sorted(col, 0.25);
    out.hi50(j) = quantile_sorted(col, 0.75);
    out.hi95(j) = quantile_sorted(col, 0.975);
  }
  return out;
}

Eigen::MatrixXd predictive_draws(const PosteriorDraws& draws, const RegressionDesign& design, Rng& rng) {
  const Eigen::MatrixXd w = stacked_design(design);
  const Eigen::MatrixXd theta = draws.stacked();
  if (theta.cols() != w.cols()) throw std::invalid_argument("predictive_draws: draws do not match the design");
  Eigen::MatrixXd out = theta * w.transpose();
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    const double sd = std::sqrt(draws.sigma2(s));
    for (Eigen::Index i = 0; i < out.cols(); ++i) out(s, i) += sd * std_normal(rng);
  }
  return out;
}

}  // namespace basofr
