#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "basofr/basis.hpp"
#include "basofr/dhs.hpp"
#include "basofr/funcdata.hpp"
#include "basofr/rng.hpp"

namespace basofr {

/// Prior on the second differences of the coefficient blocks.
enum class PriorKind { Dhs, GlobalPspline, LocalPspline };

std::string to_string(PriorKind kind);
PriorKind parse_prior_kind(const std::string& text);  // dhs | pspline | local-pspline

/// Gamma(shape, rate) priors on precisions.
struct Hyperparameters {
  double sigma_shape = 0.01;  // sigma^-2
  double sigma_rate = 0.01;
  double alpha_shape = 0.01;  // sigma_j^-2 for penalized scalar effects
  double alpha_rate = 0.01;
  double lambda_shape = 0.01;  // lambda^-2 (P-spline variants)
  double lambda_rate = 0.01;
  double intercept_variance = std::numeric_limits<double>::infinity();  // infinity = flat
};

struct McmcConfig {
  int burnin = 10000;
  int draws = 10000;
  int thin = 1;
};

struct FitConfig {
  PriorKind prior = PriorKind::Dhs;
  McmcConfig mcmc;
  std::uint64_t seed = 0;
  Hyperparameters hyper;
  DhsConfig dhs;  // the lambda0 prior here applies to every variant

  void validate() const;
};

struct ShrinkageState {
  DhsState dhs;             // PriorKind::Dhs only
  Eigen::VectorXd lambda2;  // variances of the K-2 interior second differences
  double lambda0 = 1.0;     // scale of the two boundary coefficients
};

struct ChainState {
  Eigen::VectorXd b_star;
  std::vector<Eigen::VectorXd> spline_coefs;
  Eigen::VectorXd alpha;
  double sigma2 = 1.0;
  Eigen::VectorXd sigma_j2;  // intercept entry holds its fixed prior variance
  std::vector<ShrinkageState> shrink;  // [0] for B*, then one per spline block
};

/// N(Q^{-1} l, Q^{-1})
struct GaussianConditional {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;

  [[nodiscard]] Eigen::VectorXd mean() const;
};

/// D' diag(lambda0^2, lambda2, lambda0^2)^{-1} D.
Eigen::MatrixXd difference_prior_precision(const Eigen::VectorXd& lambda2, double lambda0);

/// Cholesky draw. A failed factorization is retried once with
/// 1e-8 * trace / dim added to the diagonal, then reported.
Eigen::VectorXd sample_gaussian(const GaussianConditional& cond, Rng& rng, const std::string& what = "block");

/// [X** | spline blocks | z]
Eigen::MatrixXd stacked_design(const RegressionDesign& design);

class GibbsSampler {
 public:
  GibbsSampler(const RegressionDesign& design, FitConfig config);

  [[nodiscard]] const ChainState& state() const { return state_; }
  ChainState& state() { return state_; }
  [[nodiscard]] const FitConfig& config() const { return config_; }

  /// Replaces y and its sufficient statistics.
  void set_response(const Eigen::VectorXd& y);
  [[nodiscard]] const Eigen::VectorXd& response() const { return y_; }
  [[nodiscard]] const Eigen::MatrixXd& design_matrix() const { return w_; }

  [[nodiscard]] GaussianConditional b_star_conditional() const;
  [[nodiscard]] GaussianConditional spline_conditional(std::size_t block) const;
  [[nodiscard]] GaussianConditional alpha_conditional() const;
  [[nodiscard]] GammaParams sigma2_conditional() const;                    // law of sigma^-2
  [[nodiscard]] GammaParams sigma_j2_conditional(Eigen::Index j) const;    // law of sigma_j^-2

  void sample_b_star(Rng& rng);
  void sample_splines(Rng& rng);
  void sample_alpha(Rng& rng);
  void sample_scales(Rng& rng);      // DHS: indicators, h, lambda0; P-spline: lambda, lambda0
  void sample_ar_params(Rng& rng);   // DHS only: PG auxiliaries, mu_h, phi
  void sample_variances(Rng& rng);   // sigma^2 and sigma_j^2

  /// One full scan in block order.
  void sweep(Rng& rng);

  [[nodiscard]] Eigen::VectorXd theta() const;  // stacked coefficients matching design_matrix()
  [[nodiscard]] double ssr() const;
  [[nodiscard]] long iteration() const { return iteration_; }

 private:
  [[nodiscard]] GaussianConditional block_conditional(Eigen::Index offset, Eigen::Index size,
                                                      const Eigen::MatrixXd& prior_precision) const;
  void set_block(Eigen::Index offset, const Eigen::VectorXd& value);
  void update_shrinkage(ShrinkageState& s, const Eigen::VectorXd& coeffs, Rng& rng);

  FitConfig config_;
  Eigen::MatrixXd w_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd wty_;
  Eigen::Index kb_ = 0;
  std::vector<Eigen::Index> spline_offsets_;
  std::vector<Eigen::Index> spline_sizes_;
  Eigen::Index alpha_offset_ = 0;
  std::vector<bool> penalized_;
  ChainState state_;
  long iteration_ = 0;
};

/// Stored chain output. Row s of each matrix is draw s.
struct PosteriorDraws {
  PriorKind prior = PriorKind::Dhs;
  std::uint64_t seed = 0;
  Eigen::MatrixXd b_star;
  Eigen::MatrixXd alpha;
  Eigen::VectorXd sigma2;
  Eigen::MatrixXd sigma_j2;
  std::vector<Eigen::MatrixXd> spline_coefs;
  Eigen::MatrixXd lambda2;  // B* interior difference variances
  Eigen::VectorXd lambda0;
  Eigen::MatrixXd h;        // DHS only
  Eigen::VectorXd mu_h;
  Eigen::VectorXd phi;
  Eigen::VectorXd fitted_mean;  // posterior mean of the regression function at each subject

  [[nodiscard]] Eigen::Index size() const { return sigma2.size(); }
  /// Draws of the stacked coefficient vector matching stacked_design().
  [[nodiscard]] Eigen::MatrixXd stacked() const;
};

using ProgressFn = std::function<void(long iteration, long total)>;

PosteriorDraws fit(const RegressionDesign& design, const FitConfig& config, const ProgressFn& progress = {});

struct BetaSummary {
  std::vector<double> grid;
  Eigen::VectorXd mean;
  Eigen::VectorXd lo50, hi50;
  Eigen::VectorXd lo95, hi95;
};

BetaSummary summarize_beta(const Eigen::MatrixXd& b_star_draws, const BSplineBasis& basis,
                           const std::vector<double>& grid);

/// y~_i^(s) = w_i' theta^(s) + N(0, sigma2^(s)); rows are draws.
Eigen::MatrixXd predictive_draws(const PosteriorDraws& draws, const RegressionDesign& design, Rng& rng);

}  // namespace basofr
