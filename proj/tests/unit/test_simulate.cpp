#include <doctest.h>

#include <cmath>
#include <numbers>

#include "basofr/errors.hpp"
#include "basofr/simulate.hpp"
#include "basofr/study.hpp"
#include "oracles.hpp"

using namespace basofr;

TEST_SUITE("simulate") {
TEST_CASE("smooth truth shape") {
  CHECK(true_beta_smooth(1.0 / 3.0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(true_beta_smooth(2.0 / 3.0) == doctest::Approx(-3.0).epsilon(1e-6));
  CHECK(std::abs(true_beta_smooth(0.0)) < 1e-6);
  CHECK(std::abs(true_beta_smooth(1.0)) < 1e-6);
  Truth t;
  CHECK(t(0.5) == doctest::Approx(true_beta_smooth(0.5)));
}

TEST_CASE("locally constant truth") {
  Truth t;
  t.kind = Truth::Kind::LocallyConstant;
  CHECK(t(0.1) == 1.0);
  CHECK(t(1.0 / 3.0) == 0.0);
  CHECK(t(0.9) == -1.0);
  t.levels = {1.0};
  CHECK_THROWS(t.validate());
}

TEST_CASE("regular grid hits the endpoint exactly") {
  const auto g = regular_grid(0.0, 1.0, 0.01);
  CHECK(g.size() == 101u);
  CHECK(g.back() == 1.0);
  CHECK(g[37] == doctest::Approx(0.37).epsilon(1e-15));
}

TEST_CASE("curve moments follow the Gaussian process") {
  SimulationDesign d;
  d.n = 6000;
  d.gp.length_scale = 0.05;
  Rng rng = make_rng(1);
  const auto curves = gen_curves(d, rng);
  const std::size_t a = 30;
  const std::size_t b = 35;
  std::vector<double> xa;
  std::vector<double> xb;
  for (const auto& c : curves) {
    xa.push_back(c.x[a]);
    xb.push_back(c.x[b]);
  }
  // phase ~ U(0, 1): E sin(w t + U) = cos(w t) - cos(w t + 1)
  const double w = 2.0 * std::numbers::pi / d.gp.period;
  auto seasonal_mean = [&](double t) { return std::cos(w * t) - std::cos(w * t + 1.0); };
  auto seasonal_cov = [&](double s, double t) {
    // E[sin(ws+U) sin(wt+U)] - means
    const double e = 0.5 * std::cos(w * (s - t)) - 0.5 * (std::sin(w * (s + t) + 2.0) - std::sin(w * (s + t))) / 2.0;
    return e - seasonal_mean(s) * seasonal_mean(t);
  };
  const double ta = curves[0].t[a];
  const double tb = curves[0].t[b];
  const double se = std::sqrt((0.49 + 0.5) / d.n);
  CHECK(std::abs(oracle::mean(xa) - seasonal_mean(ta)) < 4.0 * se);
  CHECK(oracle::variance(xa) == doctest::Approx(0.49 + seasonal_cov(ta, ta)).epsilon(0.06));
  double cov = 0.0;
  const double ma = oracle::mean(xa);
  const double mb = oracle::mean(xb);
  for (std::size_t i = 0; i < xa.size(); ++i) cov += (xa[i] - ma) * (xb[i] - mb);
  cov /= static_cast<double>(xa.size() - 1);
  const double dt = tb - ta;
  CHECK(cov == doctest::Approx(0.49 * std::exp(-0.5 * dt * dt / 0.0025) + seasonal_cov(ta, tb)).epsilon(0.08));
}

TEST_CASE("noise level reproduces the requested signal-to-noise ratio") {
  const std::vector<double> signal{1.0, 2.0, 4.0, -1.0, 0.5};
  const double var = oracle::variance(signal);
  for (double snr : {0.5, 5.0}) {
    Rng rng = make_rng(2);
    const auto r = gen_responses(signal, snr, rng);
    CHECK(var / (r.sigma * r.sigma) == doctest::Approx(snr).epsilon(1e-12));
  }
  Rng rng = make_rng(3);
  CHECK_THROWS(gen_responses({1.0, 1.0, 1.0}, 5.0, rng));
  CHECK_THROWS(gen_responses(signal, 0.0, rng));
}

TEST_CASE("exact signal agrees with the trapezoid rule on the raw curves") {
  for (auto kind : {Truth::Kind::Smooth, Truth::Kind::LocallyConstant}) {
    SimulationDesign d;
    d.n = 40;
    d.gp.length_scale = 0.15;
    d.grid = regular_grid(0.0, 1.0, 0.0025);
    d.truth.kind = kind;
    const auto data = simulate_dataset(d, 53, 53, 0);
    const auto trap = trapezoid_signal(data.observations, d.truth);
    const double scale = std::sqrt(oracle::variance(trap));
    for (std::size_t i = 0; i < trap.size(); ++i) CHECK(std::abs(data.signal[i] - trap[i]) < 0.02 * scale);
  }
}

TEST_CASE("metrics on a five-point example") {
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
  const Eigen::VectorXd truth = (Eigen::VectorXd(5) << 1, 1, 0, -1, -1).finished();
  const Eigen::VectorXd est = (Eigen::VectorXd(5) << 1, 0, 0, -1, -2).finished();
  const Eigen::VectorXd lo = (Eigen::VectorXd(5) << 0.5, 0.5, -0.5, -0.5, -3).finished();
  const Eigen::VectorXd hi = (Eigen::VectorXd(5) << 1.5, 0.6, 0.5, 0.5, -1.5).finished();
  const std::vector<int> labels{1, 0, 0, -1, 0};
  const auto m = evaluate(grid, est, lo, hi, truth, labels);
  // squared errors 0,1,0,0,1 -> trapezoid 0.125*(0+1) + 0.125*(1+0) + 0 + 0.125*(0+1)
  CHECK(m.l2_error == doctest::Approx(std::sqrt(0.375)));
  CHECK(m.mean_ci_width == doctest::Approx((1.0 + 0.1 + 1.0 + 1.0 + 1.5) / 5.0));
  CHECK(m.pointwise_coverage == doctest::Approx(0.4));  // points 0 and 2
  CHECK(m.tpr == doctest::Approx(0.5));
  CHECK(m.tnr == doctest::Approx(0.5));
  const auto none = evaluate(grid, est, lo, hi, Eigen::VectorXd::Zero(5), labels);
  CHECK(std::isnan(none.tpr));
  CHECK(std::isnan(none.tnr));
}

TEST_CASE("invalid designs are configuration errors") {
  SimulationDesign d;
  d.n = 1;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  d.n = 10;
  d.snr = -1.0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
}
}
