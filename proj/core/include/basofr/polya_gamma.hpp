#pragma once

#include "basofr/rng.hpp"

namespace basofr {

/// Draw from PG(shape, tilt). Exact for shape == 1 (alternating-series
/// rejection sampler); otherwise a 200-term sum of weighted gammas whose
/// truncated tail is replaced by its mean.
double sample_polya_gamma(double shape, double tilt, Rng& rng);

/// E[PG(shape, tilt)] = shape / (2 tilt) tanh(tilt / 2), shape / 4 at tilt = 0.
double polya_gamma_mean(double shape, double tilt);

}  // namespace basofr
