#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "basofr/rng.hpp"
#include "basofr/stats.hpp"

namespace basofr {

/// Dynamic horseshoe hyperparameters. Innovations of the log-variance AR(1)
/// are Z(a, b, 0, 1); a = b = 1/2 is the horseshoe.
struct DhsConfig {
  double a = 0.5;
  double b = 0.5;
  double phi_beta_a = 10.0;  // (phi + 1) / 2 ~ Beta(phi_beta_a, phi_beta_b)
  double phi_beta_b = 2.0;
  double lambda0_shape = 0.01;  // lambda0^-2 ~ Gamma(shape, rate)
  double lambda0_rate = 0.01;
  double offset = 1e-10;  // added to squared differences before the log
  std::optional<double> fixed_phi;
  std::optional<double> fixed_mu;

  void validate() const;
};

struct DhsState {
  Eigen::VectorXd h;          // log lambda_k^2 for the K-2 interior differences
  double mu_h = 0.0;
  double phi = 0.9;
  double lambda0 = 1.0;
  std::vector<int> indicators;
  Eigen::VectorXd xi;         // PG auxiliaries of the innovations
  double xi_mu = 0.25;        // PG auxiliary of mu_h

  [[nodiscard]] Eigen::Index size() const { return h.size(); }
};

// 10-component normal mixture for log(chi^2_1) (Omori, Chib, Shephard and
// Nakajima, 2007).
namespace logchisq {
inline constexpr int kComponents = 10;
inline constexpr std::array<double, kComponents> kWeight{0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                                                        0.18842, 0.12047, 0.05591, 0.01575, 0.00115};
inline constexpr std::array<double, kComponents> kMean{1.92677,  1.34744,  0.73504,  0.02266,  -0.85173,
                                                      -1.97278, -3.46788, -5.55246, -8.68384, -14.65000};
inline constexpr std::array<double, kComponents> kVar{0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                                                     0.98583, 1.57469, 2.54498, 4.16591, 7.33342};
}  // namespace logchisq

/// log(d2^2 + offset)
Eigen::VectorXd log_square(const Eigen::VectorXd& d2, double offset);

/// Conditional component probabilities given residual log(d2^2 + offset) - h.
std::array<double, logchisq::kComponents> indicator_probabilities(double residual);

std::vector<int> sample_mixture_indicators(const Eigen::VectorXd& d2, const Eigen::VectorXd& h, Rng& rng,
                                           double offset = 1e-10);

/// eta_1 = h_1 - mu, eta_t = (h_t - mu) - phi (h_{t-1} - mu).
Eigen::VectorXd innovations(const Eigen::VectorXd& h, double mu, double phi);

/// Symmetric tridiagonal precision Q and linear term l of a Gaussian
/// N(Q^{-1} l, Q^{-1}).
struct TridiagonalSystem {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;  // Q(t, t+1)
  Eigen::VectorXd linear;

  [[nodiscard]] Eigen::MatrixXd dense() const;
};

/// Full conditional of x = h - mu_h given indicators and PG auxiliaries.
TridiagonalSystem log_vol_system(const Eigen::VectorXd& d2, const DhsState& state, const DhsConfig& config);

/// Q^{-1} l by banded Cholesky.
Eigen::VectorXd tridiagonal_mean(const TridiagonalSystem& sys);

/// One draw from N(Q^{-1} l, Q^{-1}) in O(size) work.
Eigen::VectorXd sample_tridiagonal(const TridiagonalSystem& sys, Rng& rng);

/// Joint draw of h; updates state.h and returns it.
const Eigen::VectorXd& sample_log_vols(const Eigen::VectorXd& d2, DhsState& state, const DhsConfig& config,
                                       Rng& rng);

/// xi_t ~ PG(a + b, eta_t), xi_mu ~ PG(1, mu_h).
void sample_pg_auxiliaries(DhsState& state, const DhsConfig& config, Rng& rng);

/// Gaussian full conditional of mu_h: returns (precision, linear term).
std::pair<double, double> mu_conditional(const DhsState& state, const DhsConfig& config);

/// mu_h from its Gaussian conditional, then phi by slice sampling.
void sample_ar_params(DhsState& state, const DhsConfig& config, Rng& rng);

/// Unnormalized log full conditional of phi on (-1, 1).
double phi_log_density(double phi, const DhsState& state, const DhsConfig& config);

/// lambda0^-2 ~ Gamma(shape + 1, rate + (b1^2 + bk^2) / 2); returns lambda0.
GammaParams lambda0_conditional(double b1, double bk, const DhsConfig& config);
double sample_lambda0(double b1, double bk, const DhsConfig& config, Rng& rng);

/// Z(a, b, 0, 1) draw: logit of a Beta(a, b) variable.
double sample_z(double a, double b, Rng& rng);

/// Initial state from pilot second differences.
DhsState dhs_initialize(const Eigen::VectorXd& d2_pilot, const DhsConfig& config);

/// Draws every DHS quantity from the prior (used by simulation-based checks).
DhsState sample_dhs_prior(Eigen::Index size, const DhsConfig& config, Rng& rng);

/// One sweep: indicators, h, PG auxiliaries, mu_h, phi, then lambda0 from
/// the boundary coefficients.
void dhs_update(const Eigen::VectorXd& coeffs, DhsState& state, const DhsConfig& config, Rng& rng);

}  // namespace basofr
