#include <doctest.h>

#include <chrono>
#include <cmath>

#include "basofr/dhs.hpp"
#include "basofr/polya_gamma.hpp"
#include "basofr/stats.hpp"
#include "oracles.hpp"

using namespace basofr;

namespace {

struct Moments {
  double mean;
  double se;
};

Moments moments(const std::vector<double>& v) {
  return {oracle::mean(v), std::sqrt(oracle::variance(v) / static_cast<double>(v.size()))};
}

double half_cauchy(Rng& rng) { return std::abs(std::tan(M_PI * (uniform01(rng) - 0.5))); }

DhsState random_state(Eigen::Index k, Rng& rng) {
  DhsState s;
  s.h.resize(k);
  s.xi.resize(k);
  s.indicators.resize(static_cast<std::size_t>(k));
  for (Eigen::Index t = 0; t < k; ++t) {
    s.h(t) = -1.0 + 2.0 * uniform01(rng);
    s.xi(t) = 0.05 + uniform01(rng);
    s.indicators[static_cast<std::size_t>(t)] = static_cast<int>(uniform01(rng) * 10.0) % 10;
  }
  s.mu_h = 0.3;
  s.phi = 0.7;
  return s;
}

}  // namespace

TEST_SUITE("polya_gamma") {
TEST_CASE("PG(1, 0) mean is 1/4") {
  Rng rng = make_rng(1);
  std::vector<double> v(100000);
  for (auto& x : v) x = sample_polya_gamma(1.0, 0.0, rng);
  const auto m = moments(v);
  CHECK(std::abs(m.mean - 0.25) < 3.0 * m.se);
  CHECK(*std::min_element(v.begin(), v.end()) > 0.0);
}

TEST_CASE("PG(1, c) mean is tanh(c/2)/(2c)") {
  for (double c : {2.0, -5.0, 0.3}) {
    Rng rng = make_rng(2, {static_cast<std::uint64_t>(c * 10 + 100)});
    std::vector<double> v(100000);
    for (auto& x : v) x = sample_polya_gamma(1.0, c, rng);
    const auto m = moments(v);
    CHECK(std::abs(m.mean - std::tanh(c / 2.0) / (2.0 * c)) < 3.0 * m.se);
    CHECK(*std::min_element(v.begin(), v.end()) > 0.0);
  }
}

TEST_CASE("general shape uses the gamma-sum representation") {
  Rng rng = make_rng(3);
  std::vector<double> v(40000);
  for (auto& x : v) x = sample_polya_gamma(2.5, 1.5, rng);
  const auto m = moments(v);
  CHECK(std::abs(m.mean - 2.5 / 3.0 * std::tanh(0.75)) < 3.0 * m.se);
  CHECK(polya_gamma_mean(1.0, 0.0) == 0.25);
  CHECK_THROWS(sample_polya_gamma(0.0, 1.0, rng));
}
}

TEST_SUITE("dhs") {
TEST_CASE("mixture probabilities match direct density evaluation") {
  for (double r : {-10.0, -2.0, 0.0, 0.4, 3.0}) {
    const auto p = indicator_probabilities(r);
    double tot = 0.0;
    std::array<double, 10> ref{};
    for (int j = 0; j < 10; ++j) {
      ref[j] = logchisq::kWeight[j] / std::sqrt(logchisq::kVar[j]) *
               std::exp(-0.5 * std::pow(r - logchisq::kMean[j], 2) / logchisq::kVar[j]);
      tot += ref[j];
    }
    double s = 0.0;
    for (int j = 0; j < 10; ++j) {
      CHECK(p[j] == doctest::Approx(ref[j] / tot).epsilon(1e-12));
      s += p[j];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
  // components 2..9 dominate at their own means; 0 and 1 are outweighed by their neighbours
  for (int j = 2; j < 10; ++j) {
    const auto p = indicator_probabilities(logchisq::kMean[j]);
    CHECK(std::max_element(p.begin(), p.end()) - p.begin() == j);
  }
}

TEST_CASE("zero differences stay finite through the offset") {
  Rng rng = make_rng(4);
  const Eigen::VectorXd d2 = Eigen::VectorXd::Zero(5);
  const auto ls = log_square(d2, 1e-10);
  CHECK(ls.allFinite());
  CHECK(ls(0) == doctest::Approx(std::log(1e-10)));
  const auto ind = sample_mixture_indicators(d2, Eigen::VectorXd::Zero(5), rng);
  CHECK(ind.size() == 5u);
}

TEST_CASE("log-volatility system matches a dense construction") {
  Rng rng = make_rng(5);
  const Eigen::Index k = 10;
  DhsConfig cfg;
  cfg.a = 0.7;
  cfg.b = 0.4;
  const DhsState st = random_state(k, rng);
  Eigen::VectorXd d2(k);
  for (auto& x : d2) x = std_normal(rng);
  const auto sys = log_vol_system(d2, st, cfg);

  // eta = L x with L unit lower bidiagonal (-phi below the diagonal)
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index t = 1; t < k; ++t) l(t, t - 1) = -st.phi;
  const double kappa = 0.5 * (cfg.a - cfg.b);
  Eigen::MatrixXd q = l.transpose() * st.xi.asDiagonal() * l;
  Eigen::VectorXd lin = kappa * l.transpose() * Eigen::VectorXd::Ones(k);
  for (Eigen::Index t = 0; t < k; ++t) {
    const auto s = static_cast<std::size_t>(st.indicators[static_cast<std::size_t>(t)]);
    const double ystar = std::log(d2(t) * d2(t) + cfg.offset);
    q(t, t) += 1.0 / logchisq::kVar[s];
    lin(t) += (ystar - logchisq::kMean[s] - st.mu_h) / logchisq::kVar[s];
  }
  CHECK((sys.dense() - q).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((sys.linear - lin).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd mean = q.ldlt().solve(lin);
  CHECK((tridiagonal_mean(sys) - mean).cwiseAbs().maxCoeff() < 1e-8);

  // a draw is mean + L^-T z for the dense Cholesky factor and the same normals
  Rng draw_rng = make_rng(6);
  const Eigen::VectorXd x = sample_tridiagonal(sys, draw_rng);
  Rng z_rng = make_rng(6);
  Eigen::VectorXd z(k);
  for (auto& v : z) v = std_normal(z_rng);
  const Eigen::MatrixXd chol = q.llt().matrixL();
  CHECK((chol.transpose() * (x - mean) - z).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("huge differences move every log-volatility up") {
  Rng rng = make_rng(7);
  DhsConfig cfg;
  DhsState st = random_state(12, rng);
  const Eigen::VectorXd d2 = Eigen::VectorXd::Constant(12, 1e3);
  const Eigen::VectorXd post = tridiagonal_mean(log_vol_system(d2, st, cfg)).array() + st.mu_h;
  for (Eigen::Index t = 0; t < 12; ++t) CHECK(post(t) > st.mu_h);
}

TEST_CASE("mu conditional matches the expanded-likelihood algebra") {
  Rng rng = make_rng(8);
  DhsConfig cfg;
  cfg.a = 0.8;
  cfg.b = 0.3;
  DhsState st = random_state(7, rng);
  st.xi_mu = 0.37;
  const auto [prec, lin] = mu_conditional(st, cfg);
  // Gaussian in mu from sum_t -xi_t/2 eta_t^2 + kappa eta_t and the N(0, 1/xi_mu) prior term
  const double kappa = 0.5 * (cfg.a - cfg.b);
  auto logf = [&](double mu) {
    const auto eta = innovations(st.h, mu, st.phi);
    double s = -0.5 * st.xi_mu * mu * mu;
    for (Eigen::Index t = 0; t < eta.size(); ++t) s += -0.5 * st.xi(t) * eta(t) * eta(t) + kappa * eta(t);
    return s;
  };
  const double f0 = logf(0.0);
  const double f1 = logf(1.0);
  const double fm = logf(-1.0);
  const double a2 = -(f1 + fm - 2.0 * f0);  // precision
  const double a1 = 0.5 * (f1 - fm);         // linear term
  CHECK(prec == doctest::Approx(a2).epsilon(1e-10));
  CHECK(lin == doctest::Approx(a1).epsilon(1e-10));
}

TEST_CASE("lambda0 conditional") {
  DhsConfig cfg;
  const auto g0 = lambda0_conditional(0.0, 0.0, cfg);
  CHECK(g0.shape == doctest::Approx(1.01));
  CHECK(g0.rate == doctest::Approx(0.01));
  const auto g1 = lambda0_conditional(2.0, -1.0, cfg);
  CHECK(g1.rate == doctest::Approx(0.01 + 2.5));
  Rng rng = make_rng(9);
  std::vector<double> small;
  std::vector<double> large;
  for (int i = 0; i < 4000; ++i) {
    small.push_back(sample_lambda0(0.1, 0.1, cfg, rng));
    large.push_back(sample_lambda0(5.0, 5.0, cfg, rng));
  }
  CHECK(*std::min_element(small.begin(), small.end()) > 0.0);
  CHECK(oracle::sorted_quantile(large, 0.5) > oracle::sorted_quantile(small, 0.5));
}

TEST_CASE("prior-only AR updates reproduce the Beta(10, 2) law of (phi + 1) / 2") {
  DhsConfig cfg;
  Rng rng = make_rng(10);
  DhsState st = sample_dhs_prior(6, cfg, rng);
  std::vector<double> u;
  for (int it = 0; it < 60000; ++it) {
    // fresh h from the AR(1) prior given (mu, phi), then the conditional updates
    double prev = 0.0;
    for (Eigen::Index t = 0; t < st.h.size(); ++t) {
      const double eta = sample_z(cfg.a, cfg.b, rng);
      prev = (t == 0 ? 0.0 : st.phi * prev) + eta;
      st.h(t) = st.mu_h + prev;
    }
    sample_pg_auxiliaries(st, cfg, rng);
    sample_ar_params(st, cfg, rng);
    REQUIRE(std::abs(st.phi) < 1.0);
    if (it % 6 == 0) u.push_back(0.5 * (st.phi + 1.0));
  }
  const auto m = moments(u);
  CHECK(std::abs(m.mean - 10.0 / 12.0) < 3.0 * m.se * 2.0);  // SE doubled for residual autocorrelation
  // Beta(10, 2) variance = 10*2 / (12^2 * 13)
  CHECK(oracle::variance(u) == doctest::Approx(20.0 / (144.0 * 13.0)).epsilon(0.1));
}

TEST_CASE("constant h concentrates mu near the constant") {
  DhsConfig cfg;
  cfg.fixed_phi = 0.5;
  Rng rng = make_rng(11);
  DhsState st = sample_dhs_prior(400, cfg, rng);
  st.h.setConstant(-2.0);
  std::vector<double> mus;
  for (int it = 0; it < 400; ++it) {
    sample_pg_auxiliaries(st, cfg, rng);
    sample_ar_params(st, cfg, rng);
    if (it > 50) mus.push_back(st.mu_h);
  }
  CHECK(std::abs(oracle::mean(mus) + 2.0) < 0.25);
}

TEST_CASE("with phi = 0 the prior scale is a product of two half-Cauchy scales") {
  DhsConfig cfg;
  cfg.fixed_phi = 0.0;
  Rng rng = make_rng(12);
  std::vector<double> dhs;
  std::vector<double> hs;
  for (int i = 0; i < 10000; ++i) {
    const auto st = sample_dhs_prior(3, cfg, rng);
    dhs.push_back(std::exp(0.5 * st.h(1)));
    hs.push_back(half_cauchy(rng) * half_cauchy(rng));
  }
  CHECK(oracle::ks_two_sample_pvalue(dhs, hs) > 0.01);
  for (double p : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const double a = oracle::sorted_quantile(dhs, p);
    const double b = oracle::sorted_quantile(hs, p);
    CHECK(std::abs(a - b) / b < 0.08);
  }
}

TEST_CASE("with phi = 0 the volatility sampler matches a horseshoe Gibbs sampler") {
  const Eigen::VectorXd d2 = (Eigen::VectorXd(6) << 0.05, -0.3, 2.0, 0.01, -4.0, 0.5).finished();
  const Eigen::Index probe = 2;
  DhsConfig cfg;
  cfg.fixed_phi = 0.0;
  const int draws = 10000;
  const int thin = 25;

  Rng rng = make_rng(13);
  DhsState st = dhs_initialize(d2, cfg);
  st.phi = 0.0;
  std::vector<double> dhs;
  for (int it = 0; it < 2000 + draws * thin; ++it) {
    st.indicators = sample_mixture_indicators(d2, st.h, rng, cfg.offset);
    sample_log_vols(d2, st, cfg, rng);
    sample_pg_auxiliaries(st, cfg, rng);
    sample_ar_params(st, cfg, rng);
    if (it >= 2000 && (it - 2000) % thin == 0) dhs.push_back(std::exp(0.5 * st.h(probe)));
  }

  // inverse-gamma auxiliary sampler: d2_k ~ N(0, tau^2 lam_k^2), lam_k, tau ~ C+(0, 1)
  Rng hrng = make_rng(14);
  auto inv_gamma = [&](double shape, double rate) { return 1.0 / gamma_draw(shape, rate, hrng); };
  const auto p = d2.size();
  Eigen::VectorXd lam2 = Eigen::VectorXd::Ones(p);
  Eigen::VectorXd nu = Eigen::VectorXd::Ones(p);
  double tau2 = 1.0;
  double xi = 1.0;
  std::vector<double> hs;
  for (int it = 0; it < 2000 + draws * thin; ++it) {
    for (Eigen::Index k = 0; k < p; ++k) {
      lam2(k) = inv_gamma(1.0, 1.0 / nu(k) + d2(k) * d2(k) / (2.0 * tau2));
      nu(k) = inv_gamma(1.0, 1.0 + 1.0 / lam2(k));
    }
    double s = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) s += d2(k) * d2(k) / lam2(k);
    tau2 = inv_gamma(0.5 * static_cast<double>(p + 1), 1.0 / xi + 0.5 * s);
    xi = inv_gamma(1.0, 1.0 + 1.0 / tau2);
    if (it >= 2000 && (it - 2000) % thin == 0) hs.push_back(std::sqrt(tau2 * lam2(probe)));
  }
  CHECK(oracle::ks_two_sample_pvalue(dhs, hs) > 0.01);
}

TEST_CASE("log-volatility sampling cost is linear in K") {
  auto time_k = [](Eigen::Index k) {
    DhsConfig cfg;
    Rng rng = make_rng(15);
    DhsState st = sample_dhs_prior(k, cfg, rng);
    Eigen::VectorXd d2(k);
    for (auto& v : d2) v = std_normal(rng);
    st.indicators = sample_mixture_indicators(d2, st.h, rng);
    double best = 1e30;
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      for (int i = 0; i < 50; ++i) sample_log_vols(d2, st, cfg, rng);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  const double t200 = time_k(200);
  const double t2000 = time_k(2000);
  CHECK(t2000 <= 15.0 * t200);
}
}
