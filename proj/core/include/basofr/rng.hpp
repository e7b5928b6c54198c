#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace basofr {

using Rng = std::mt19937_64;

/// Independent stream for (seed, tags...). Used to give replicates, chains
/// and post-processing steps their own reproducible generators.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  std::seed_seq::result_type words[16]{};
  int n = 0;
  words[n++] = static_cast<std::uint32_t>(seed);
  words[n++] = static_cast<std::uint32_t>(seed >> 32);
  for (auto t : tags) {
    if (n + 2 > 16) break;
    words[n++] = static_cast<std::uint32_t>(t);
    words[n++] = static_cast<std::uint32_t>(t >> 32);
  }
  std::seed_seq seq(words, words + n);
  return Rng(seq);
}

inline double std_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline double uniform01(Rng& rng) {
  // (0,1), never exactly 0
  std::uniform_real_distribution<double> d(0.0, 1.0);
  double u = d(rng);
  while (u <= 0.0) u = d(rng);
  return u;
}

inline double exponential1(Rng& rng) {
  std::exponential_distribution<double> d(1.0);
  return d(rng);
}

/// Gamma(shape, rate) draw.
double gamma_draw(double shape, double rate, Rng& rng);

/// Gamma(shape, rate) draw returned on the log scale; stable for tiny shapes.
double log_gamma_draw(double shape, double rate, Rng& rng);

}  // namespace basofr
