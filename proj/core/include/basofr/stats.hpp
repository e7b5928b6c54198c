#pragma once

#include <span>
#include <vector>

namespace basofr {

/// Gamma(shape, rate) law of a precision.
struct GammaParams {
  double shape = 0.0;
  double rate = 0.0;
};

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
double quantile_sorted(std::span<const double> sorted, double prob);

/// Sorts a copy and returns the type-7 quantile.
double quantile(std::span<const double> values, double prob);

double mean(std::span<const double> values);

/// Sample variance with n-1 denominator.
double sample_variance(std::span<const double> values);

}  // namespace basofr
