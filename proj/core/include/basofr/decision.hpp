#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "basofr/basis.hpp"
#include "basofr/funcdata.hpp"
#include "basofr/fused_lasso.hpp"
#include "basofr/gibbs.hpp"

namespace basofr {

/// Ordered cells [b_k, b_{k+1}) covering [b_0, b_K]; the last cell is closed.
struct Partition {
  std::vector<double> breaks;

  [[nodiscard]] int size() const { return static_cast<int>(breaks.size()) - 1; }
  [[nodiscard]] Domain cell(int k) const;
  [[nodiscard]] int locate(double t) const;  // -1 outside
  void validate() const;

  /// One cell per interval of a strictly increasing grid.
  static Partition from_grid(std::vector<double> grid);
};

/// n x K matrix of X_i(T_k) = integral of X_i over T_k intersected with the subject domain.
Eigen::MatrixXd aggregate(const std::vector<CoefCurve>& curves, const Partition& partition);

struct PathEntry {
  double lambda = 0.0;
  Eigen::VectorXd delta;
  int num_levels = 0;
  double empirical_mse = 0.0;
};

struct SolutionPath {
  std::vector<PathEntry> entries;  // lambda strictly decreasing
  bool rank_deficient = false;
  int level_violations = 0;  // times the level count rose with lambda
};

/// Fit-to-the-fit path for the given targets, scored against the adjusted
/// responses. Keeps at most `max_entries` knots for diagnostics, always
/// retaining the empirical minimizer and the two ends of every run of equal
/// level counts.
SolutionPath decision_path(const Eigen::MatrixXd& agg, const Eigen::VectorXd& targets,
                           const Eigen::VectorXd& adjusted_y, std::size_t max_entries = 100);

/// n^-1 sum_i (adjusted_y_i - agg_i' delta)^2
double empirical_mse(const Eigen::VectorXd& delta, const Eigen::VectorXd& adjusted_y, const Eigen::MatrixXd& agg);

/// Predictive loss per draw (rows) and path entry (columns) from explicit
/// covariate-adjusted predictive draws (draws x n).
Eigen::MatrixXd predictive_mse_draws(const SolutionPath& path, const Eigen::MatrixXd& agg,
                                     const Eigen::MatrixXd& adjusted_predictive);

/// As above, regenerating each draw's adjusted predictive vector
/// X** B*^(s) + N(0, sigma2^(s)) on the fly.
Eigen::MatrixXd predictive_mse_draws(const SolutionPath& path, const Eigen::MatrixXd& agg,
                                     const PosteriorDraws& draws, const RegressionDesign& design, Rng& rng);

struct AcceptableFamily {
  std::size_t lambda_min = 0;
  std::size_t simplest = 0;
  std::vector<char> member;
  Eigen::MatrixXd d_tilde;  // percent differences, draws x entries
  std::vector<double> frac_nonpositive;
};

/// lambda is acceptable when its lower (1 - epsilon) predictive interval for
/// the percent difference reaches zero: #{D~ <= 0} >= epsilon * S.
AcceptableFamily acceptable_family(const SolutionPath& path, const Eigen::MatrixXd& e_tilde, double epsilon);

struct ConstantRun {
  double start = 0.0;
  double end = 0.0;
  double level = 0.0;
};

struct LocallyConstantEstimate {
  Partition partition;
  Eigen::VectorXd delta;
  double lambda = 0.0;
  std::vector<ConstantRun> runs;

  [[nodiscard]] double value(double t) const;
};

LocallyConstantEstimate make_estimate(const Partition& partition, const Eigen::VectorXd& delta, double lambda,
                                      double tol = 1e-9);

struct Window {
  double start = 0.0;
  double end = 0.0;
  double level = 0.0;
  int label = 0;  // +1, 0, -1
};

int sign_label(double level, double zero_tol);

std::vector<Window> extract_windows(const LocallyConstantEstimate& estimate, double zero_tol);

/// Per-grid-point labels of a locally constant estimate.
std::vector<int> grid_labels(const LocallyConstantEstimate& estimate, const std::vector<double>& grid,
                             double zero_tol);

/// Pointwise band selection: + where lo > 0, - where hi < 0.
std::vector<int> ci_labels(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// Contiguous equal-label runs of grid points.
std::vector<Window> ci_windows(const std::vector<double>& grid, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                               const Eigen::VectorXd& mean);

struct DecisionOptions {
  double epsilon = 0.10;
  double zero_tol = 0.0;
  std::size_t max_entries = 100;
  std::uint64_t seed = 0;
};

struct DecisionResult {
  Eigen::MatrixXd agg;
  SolutionPath path;
  AcceptableFamily family;
  LocallyConstantEstimate estimate;
  std::vector<Window> windows;
};

/// Aggregation, path, predictive diagnostics, acceptable family and the
/// windows of its simplest member.
DecisionResult decision_analysis(const std::vector<CoefCurve>& curves, const Partition& partition,
                                 const RegressionDesign& design, const PosteriorDraws& draws,
                                 const DecisionOptions& options);

}  // namespace basofr
