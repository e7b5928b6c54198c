#include "basofr/dhs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "basofr/polya_gamma.hpp"

namespace basofr {

void DhsConfig::validate() const {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("dhs: Z-distribution shapes must be positive");
  if (!(phi_beta_a > 0.0) || !(phi_beta_b > 0.0)) throw std::invalid_argument("dhs: phi prior shapes must be positive");
  if (!(lambda0_shape > 0.0) || !(lambda0_rate > 0.0)) {
    throw std::invalid_argument("dhs: lambda0 prior shape and rate must be positive");
  }
  if (!(offset >= 0.0)) throw std::invalid_argument("dhs: offset must be nonnegative");
  if (fixed_phi && !(std::fabs(*fixed_phi) < 1.0)) throw std::invalid_argument("dhs: fixed phi must satisfy |phi| < 1");
}

Eigen::VectorXd log_square(const Eigen::VectorXd& d2, double offset) {
  return (d2.array().square() + offset).log().matrix();
}

std::array<double, logchisq::kComponents> indicator_probabilities(double residual) {
  std::array<double, logchisq::kComponents> logp{};
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < logchisq::kComponents; ++j) {
    const double z = residual - logchisq::kMean[j];
    logp[j] = std::log(logchisq::kWeight[j]) - 0.5 * std::log(logchisq::kVar[j]) - 0.5 * z * z / logchisq::kVar[j];
    mx = std::max(mx, logp[j]);
  }
  double total = 0.0;
  for (auto& v : logp) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : logp) v /= total;
  return logp;
}

std::vector<int> sample_mixture_indicators(const Eigen::VectorXd& d2, const Eigen::VectorXd& h, Rng& rng,
                                           double offset) {
  if (d2.size() != h.size()) throw std::invalid_argument("sample_mixture_indicators: size mismatch");
  if (!d2.allFinite() || !h.allFinite()) throw std::invalid_argument("sample_mixture_indicators: non-finite input");
  const Eigen::VectorXd ystar = log_square(d2, offset);
  std::vector<int> s(static_cast<std::size_t>(d2.size()));
  for (Eigen::Index t = 0; t < d2.size(); ++t) {
    const auto p = indicator_probabilities(ystar(t) - h(t));
    double u = uniform01(rng);
    int j = 0;
    while (j < logchisq::kComponents - 1 && u > p[static_cast<std::size_t>(j)]) {
      u -= p[static_cast<std::size_t>(j)];
      ++j;
    }
    s[static_cast<std::size_t>(t)] = j;
  }
  return s;
}

Eigen::VectorXd innovations(const Eigen::VectorXd& h, double mu, double phi) {
  Eigen::VectorXd eta(h.size());
  for (Eigen::Index t = 0; t < h.size(); ++t) {
    eta(t) = t == 0 ? h(0) - mu : (h(t) - mu) - phi * (h(t - 1) - mu);
  }
  return eta;
}

Eigen::MatrixXd TridiagonalSystem::dense() const {
  const auto n = diag.size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  q.diagonal() = diag;
  for (Eigen::Index t = 0; t + 1 < n; ++t) q(t, t + 1) = q(t + 1, t) = off(t);
  return q;
}

TridiagonalSystem log_vol_system(const Eigen::VectorXd& d2, const DhsState& state, const DhsConfig& config) {
  const auto n = d2.size();
  if (state.h.size() != n || state.xi.size() != n || static_cast<Eigen::Index>(state.indicators.size()) != n) {
    throw std::invalid_argument("log_vol_system: state does not match the number of differences");
  }
  if (!d2.allFinite()) throw std::invalid_argument("log_vol_system: non-finite differences");
  const double kappa = 0.5 * (config.a - config.b);
  const double phi = state.phi;
  const Eigen::VectorXd ystar = log_square(d2, config.offset);

  TridiagonalSystem sys;
  sys.diag.resize(n);
  sys.off.resize(std::max<Eigen::Index>(n - 1, 0));
  sys.linear.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto s = static_cast<std::size_t>(state.indicators[static_cast<std::size_t>(t)]);
    const double v = logchisq::kVar[s];
    const bool last = t + 1 == n;
    sys.diag(t) = state.xi(t) + (last ? 0.0 : phi * phi * state.xi(t + 1)) + 1.0 / v;
    if (!last) sys.off(t) = -phi * state.xi(t + 1);
    sys.linear(t) = (ystar(t) - logchisq::kMean[s] - state.mu_h) / v + kappa * (last ? 1.0 : 1.0 - phi);
  }
  return sys;
}

namespace {

// Lower bidiagonal Cholesky factor: diagonal l, subdiagonal e.
void tridiagonal_cholesky(const TridiagonalSystem& sys, Eigen::VectorXd& l, Eigen::VectorXd& e) {
  const auto n = sys.diag.size();
  l.resize(n);
  e.resize(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index t = 0; t < n; ++t) {
    double d = sys.diag(t);
    if (t > 0) d -= e(t - 1) * e(t - 1);
    if (!(d > 0.0) || !std::isfinite(d)) throw std::runtime_error("tridiagonal precision is not positive definite");
    l(t) = std::sqrt(d);
    if (t + 1 < n) e(t) = sys.off(t) / l(t);
  }
}

Eigen::VectorXd forward(const Eigen::VectorXd& l, const Eigen::VectorXd& e, const Eigen::VectorXd& rhs) {
  Eigen::VectorXd w(rhs.size());
  for (Eigen::Index t = 0; t < rhs.size(); ++t) {
    w(t) = (rhs(t) - (t > 0 ? e(t - 1) * w(t - 1) : 0.0)) / l(t);
  }
  return w;
}

Eigen::VectorXd backward(const Eigen::VectorXd& l, const Eigen::VectorXd& e, const Eigen::VectorXd& rhs) {
  const auto n = rhs.size();
  Eigen::VectorXd x(n);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    x(t) = (rhs(t) - (t + 1 < n ? e(t) * x(t + 1) : 0.0)) / l(t);
  }
  return x;
}

}  // namespace

Eigen::VectorXd tridiagonal_mean(const TridiagonalSystem& sys) {
  Eigen::VectorXd l;
  Eigen::VectorXd e;
  tridiagonal_cholesky(sys, l, e);
  return backward(l, e, forward(l, e, sys.linear));
}

Eigen::VectorXd sample_tridiagonal(const TridiagonalSystem& sys, Rng& rng) {
  Eigen::VectorXd l;
  Eigen::VectorXd e;
  tridiagonal_cholesky(sys, l, e);
  Eigen::VectorXd w = forward(l, e, sys.linear);
  for (Eigen::Index t = 0; t < w.size(); ++t) w(t) += std_normal(rng);
  return backward(l, e, w);
}

const Eigen::VectorXd& sample_log_vols(const Eigen::VectorXd& d2, DhsState& state, const DhsConfig& config,
                                       Rng& rng) {
  const auto sys = log_vol_system(d2, state, config);
  state.h = (sample_tridiagonal(sys, rng).array() + state.mu_h).matrix();
  return state.h;
}

void sample_pg_auxiliaries(DhsState& state, const DhsConfig& config, Rng& rng) {
  const Eigen::VectorXd eta = innovations(state.h, state.mu_h, state.phi);
  state.xi.resize(eta.size());
  for (Eigen::Index t = 0; t < eta.size(); ++t) state.xi(t) = sample_polya_gamma(config.a + config.b, eta(t), rng);
  state.xi_mu = sample_polya_gamma(1.0, state.mu_h, rng);
}

std::pair<double, double> mu_conditional(const DhsState& state, const DhsConfig& config) {
  // exp(mu/2) ~ C+(0,1) is mu ~ Z(1/2, 1/2): N(0, 1/xi_mu) given its PG auxiliary.
  const double kappa = 0.5 * (config.a - config.b);
  const double phi = state.phi;
  const auto& h = state.h;
  double prec = state.xi_mu + state.xi(0);
  double lin = state.xi(0) * h(0) - kappa;
  for (Eigen::Index t = 1; t < h.size(); ++t) {
    const double r = h(t) - phi * h(t - 1);
    prec += (1.0 - phi) * (1.0 - phi) * state.xi(t);
    lin += (1.0 - phi) * (state.xi(t) * r - kappa);
  }
  return {prec, lin};
}

double phi_log_density(double phi, const DhsState& state, const DhsConfig& config) {
  if (!(phi > -1.0 && phi < 1.0)) return -std::numeric_limits<double>::infinity();
  const double kappa = 0.5 * (config.a - config.b);
  double quad = 0.0;
  double lin = 0.0;
  for (Eigen::Index t = 1; t < state.h.size(); ++t) {
    const double x0 = state.h(t - 1) - state.mu_h;
    const double x1 = state.h(t) - state.mu_h;
    quad += state.xi(t) * x0 * x0;
    lin += x0 * (state.xi(t) * x1 - kappa);
  }
  return (config.phi_beta_a - 1.0) * std::log1p(phi) + (config.phi_beta_b - 1.0) * std::log1p(-phi) -
         0.5 * quad * phi * phi + lin * phi;
}

void sample_ar_params(DhsState& state, const DhsConfig& config, Rng& rng) {
  if (config.fixed_mu) {
    state.mu_h = *config.fixed_mu;
  } else {
    const auto [prec, lin] = mu_conditional(state, config);
    state.mu_h = lin / prec + std_normal(rng) / std::sqrt(prec);
  }

  if (config.fixed_phi) {
    state.phi = *config.fixed_phi;
    return;
  }
  // Slice sampler on (-1, 1) with shrinkage toward the current value.
  const double x0 = state.phi;
  const double level = phi_log_density(x0, state, config) - exponential1(rng);
  double lo = -1.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double x = lo + uniform01(rng) * (hi - lo);
    if (phi_log_density(x, state, config) > level) {
      state.phi = x;
      return;
    }
    (x < x0 ? lo : hi) = x;
  }
  // Interval collapsed onto the current point: keep it.
}

GammaParams lambda0_conditional(double b1, double bk, const DhsConfig& config) {
  if (!std::isfinite(b1) || !std::isfinite(bk)) throw std::invalid_argument("lambda0: non-finite coefficients");
  return {config.lambda0_shape + 1.0, config.lambda0_rate + 0.5 * (b1 * b1 + bk * bk)};
}

double sample_lambda0(double b1, double bk, const DhsConfig& config, Rng& rng) {
  const GammaParams g = lambda0_conditional(b1, bk, config);
  const double lg = log_gamma_draw(g.shape, g.rate, rng);
  return std::exp(-0.5 * lg);
}

double sample_z(double a, double b, Rng& rng) { return log_gamma_draw(a, 1.0, rng) - log_gamma_draw(b, 1.0, rng); }

DhsState dhs_initialize(const Eigen::VectorXd& d2_pilot, const DhsConfig& config) {
  if (d2_pilot.size() < 1) throw std::invalid_argument("dhs_initialize: need at least one difference");
  const auto n = d2_pilot.size();
  double var = d2_pilot.squaredNorm() / static_cast<double>(n);
  if (n > 1) {
    const double m = d2_pilot.mean();
    var = (d2_pilot.array() - m).square().sum() / static_cast<double>(n - 1);
  }
  const double h0 = std::clamp(std::log(var), -20.0, 20.0);
  DhsState s;
  s.h = Eigen::VectorXd::Constant(n, std::isfinite(h0) ? h0 : -20.0);
  s.phi = config.fixed_phi.value_or(0.9);
  s.mu_h = config.fixed_mu.value_or(s.h.mean());
  s.lambda0 = 1.0;
  s.indicators.assign(static_cast<std::size_t>(n), 4);
  const Eigen::VectorXd eta = innovations(s.h, s.mu_h, s.phi);
  s.xi.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) s.xi(t) = polya_gamma_mean(config.a + config.b, eta(t));
  s.xi_mu = polya_gamma_mean(1.0, s.mu_h);
  return s;
}

DhsState sample_dhs_prior(Eigen::Index size, const DhsConfig& config, Rng& rng) {
  DhsState s;
  s.mu_h = config.fixed_mu ? *config.fixed_mu : sample_z(0.5, 0.5, rng);
  if (config.fixed_phi) {
    s.phi = *config.fixed_phi;
  } else {
    const double lb = sample_z(config.phi_beta_a, config.phi_beta_b, rng);  // logit of the Beta draw
    s.phi = std::tanh(0.5 * lb);                                            // 2 * Beta - 1
  }
  s.h.resize(size);
  for (Eigen::Index t = 0; t < size; ++t) {
    const double eta = sample_z(config.a, config.b, rng);
    s.h(t) = s.mu_h + (t == 0 ? 0.0 : s.phi * (s.h(t - 1) - s.mu_h)) + eta;
  }
  s.lambda0 = std::exp(-0.5 * log_gamma_draw(config.lambda0_shape, config.lambda0_rate, rng));
  s.indicators.assign(static_cast<std::size_t>(size), 4);
  sample_pg_auxiliaries(s, config, rng);
  return s;
}

void dhs_update(const Eigen::VectorXd& coeffs, DhsState& state, const DhsConfig& config, Rng& rng) {
  const auto k = coeffs.size();
  if (k < 3 || state.h.size() != k - 2) throw std::invalid_argument("dhs_update: coefficient length mismatch");
  Eigen::VectorXd d2(k - 2);
  for (Eigen::Index t = 0; t < k - 2; ++t) d2(t) = coeffs(t) - 2.0 * coeffs(t + 1) + coeffs(t + 2);
  state.indicators = sample_mixture_indicators(d2, state.h, rng, config.offset);
  sample_log_vols(d2, state, config, rng);
  sample_pg_auxiliaries(state, config, rng);
  sample_ar_params(state, config, rng);
  state.lambda0 = sample_lambda0(coeffs(0), coeffs(k - 1), config, rng);
}

}  // namespace basofr
