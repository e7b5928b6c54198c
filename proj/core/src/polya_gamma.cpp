#include "basofr/polya_gamma.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace basofr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;  // switch point between the two series representations

// log Phi(x)
double log_norm_cdf(double x) { return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2)); }

// n-th coefficient of the alternating series for J*(1, 0) at x.
double series_term(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0) return 0.0;
  const double e = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) - 2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(e);
}

// Probability of proposing from the truncated exponential piece.
double texp_mass(double z, double fz) {
  const double rt = std::sqrt(1.0 / kTrunc);
  const double b = rt * (kTrunc * z - 1.0);
  const double a = -rt * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + log_norm_cdf(b);
  const double xa = x0 + z + log_norm_cdf(a);
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse Gaussian(1/z, 1) truncated to (0, kTrunc).
double truncated_inv_gauss(double z, Rng& rng) {
  double x = kTrunc + 1.0;
  if (z < 1.0 / kTrunc) {
    double accept = 0.0;
    while (uniform01(rng) > accept) {
      double e1 = exponential1(rng);
      double e2 = exponential1(rng);
      while (e1 * e1 > 2.0 * e2 / kTrunc) {
        e1 = exponential1(rng);
        e2 = exponential1(rng);
      }
      x = 1.0 + e1 * kTrunc;
      x = kTrunc / (x * x);
      accept = std::exp(-0.5 * z * z * x);
    }
    return x;
  }
  const double mu = 1.0 / z;
  while (x > kTrunc) {
    double y = std_normal(rng);
    y *= y;
    const double mu_y = mu * y;
    x = mu + 0.5 * mu * mu_y - 0.5 * mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
    if (uniform01(rng) > mu / (mu + x)) x = mu * mu / x;
  }
  return x;
}

double pg1(double tilt, Rng& rng) {
  const double z = 0.5 * std::fabs(tilt);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double p_exp = texp_mass(z, fz);
  for (;;) {
    const double x = uniform01(rng) < p_exp ? kTrunc + exponential1(rng) / fz : truncated_inv_gauss(z, rng);
    double s = series_term(0, x);
    const double y = uniform01(rng) * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_term(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_term(n, x);
        if (y > s) break;
      }
    }
  }
}

}  // namespace

double polya_gamma_mean(double shape, double tilt) {
  const double c = std::fabs(tilt);
  if (c < 1e-6) return shape * (0.25 - c * c / 48.0);
  return shape / (2.0 * c) * std::tanh(0.5 * c);
}

double sample_polya_gamma(double shape, double tilt, Rng& rng) {
  if (!(shape > 0.0)) throw std::invalid_argument("sample_polya_gamma: shape must be positive");
  if (!std::isfinite(tilt)) throw std::invalid_argument("sample_polya_gamma: non-finite tilt");
  if (shape == 1.0) return pg1(tilt, rng);

  constexpr int kTerms = 200;
  const double c2 = tilt * tilt / (4.0 * kPi * kPi);
  double draw = 0.0;
  double head_mean = 0.0;
  for (int k = 1; k <= kTerms; ++k) {
    const double w = 1.0 / ((k - 0.5) * (k - 0.5) + c2);
    draw += w * gamma_draw(shape, 1.0, rng);
    head_mean += w * shape;
  }
  const double scale = 1.0 / (2.0 * kPi * kPi);
  const double tail = polya_gamma_mean(shape, tilt) - scale * head_mean;
  return scale * draw + std::max(tail, 0.0);
}

}  // namespace basofr
