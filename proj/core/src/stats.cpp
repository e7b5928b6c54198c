#include "basofr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "basofr/rng.hpp"

namespace basofr {

double gamma_draw(double shape, double rate, Rng& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma_draw: shape and rate must be positive");
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(rng);
}

double log_gamma_draw(double shape, double rate, Rng& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("log_gamma_draw: shape and rate must be positive");
  if (shape >= 1.0) return std::log(gamma_draw(shape, rate, rng));
  // G(a) = G(a+1) * U^(1/a); the log keeps tiny shapes from underflowing.
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  return std::log(g(rng)) + std::log(uniform01(rng)) / shape - std::log(rate);
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile: prob outside [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double prob) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, prob);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty input");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("sample_variance: need at least two values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

}  // namespace basofr
