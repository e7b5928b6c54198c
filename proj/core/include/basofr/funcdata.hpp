#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "basofr/basis.hpp"
#include "basofr/table_io.hpp"

namespace basofr {

/// Discrete observations (t_j, x_j) of one subject's exposure curve.
struct CurveObservation {
  std::string subject_id;
  std::vector<double> t;
  std::vector<double> x;
  Domain subject_domain;
};

/// X_i(t) = sum_k coeffs_k phi_k(t) on the subject's domain.
struct CoefCurve {
  std::string subject_id;
  Eigen::VectorXd coeffs;
  std::shared_ptr<const BSplineBasis> basis;
  Domain subject_domain;

  [[nodiscard]] double operator()(double t) const { return basis->evaluate(coeffs, t); }
};

/// Least-squares basis coefficients of an observed curve. Basis functions whose
/// support misses the subject domain are fixed at zero; the remaining
/// columns must have full rank on the subject's points.
CoefCurve fit_curve_coeffs(const CurveObservation& obs,
                           const std::shared_ptr<const BSplineBasis>& basis_x);

/// How one scalar covariate enters z.
struct CovariateRule {
  enum class Kind { Linear, Categorical, PiecewiseLinear, AdaptiveSpline };
  std::string name;
  Kind kind = Kind::Linear;
  std::vector<double> knots;          // PiecewiseLinear hinge locations
  int spline_size = 0;                // AdaptiveSpline K
  std::optional<Domain> spline_domain;  // AdaptiveSpline; defaults to observed range
};

struct ScalarDesignSpec {
  std::vector<CovariateRule> rules;
};

/// Per-subject scalar data: response plus raw covariate columns (text cells).
struct ScalarTable {
  std::vector<std::string> subject_ids;
  std::vector<double> response;
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> columns;  // columns[c][i]

  [[nodiscard]] int column(const std::string& name) const;
};

/// Additive nonlinear term sum_k c_k psi_k(z_i) with its own DHS-shrunk coefficients.
struct SplineBlock {
  std::string name;
  std::shared_ptr<const BSplineBasis> basis;
  Eigen::MatrixXd values;        // n x K, column-centered basis evaluations
  Eigen::RowVectorXd column_means;
};

/// Reduced regression y = z'alpha + X** B* + sum_j S_j c_j + e.
struct RegressionDesign {
  std::vector<std::string> subject_ids;
  Eigen::VectorXd y;
  Eigen::MatrixXd z;                 // n x p; the last column is the intercept
  std::vector<std::string> z_names;
  std::vector<bool> penalized;       // false for the intercept
  Eigen::VectorXd z_center;          // 0 / 1 for non-standardized columns
  Eigen::VectorXd z_scale;
  Eigen::MatrixXd x_star_star;       // n x K_B
  std::vector<SplineBlock> splines;
  std::vector<Domain> subject_domains;

  [[nodiscard]] Eigen::Index n() const { return y.size(); }
  [[nodiscard]] Eigen::Index kb() const { return x_star_star.cols(); }
  [[nodiscard]] Eigen::Index p() const { return z.cols(); }
};

/// Rows X*_i J_i with J_i the cross-Gram over subject i's domain, an
/// intercept-only z, and the given responses.
RegressionDesign build_design(const std::vector<CoefCurve>& curves, const BSplineBasis& basis_b,
                              const std::vector<double>& responses);

/// As above with scalar covariates expanded per `spec`. Continuous expanded
/// columns are centered and scaled; categorical covariates are dummy coded
/// against their first level (sorted). Rows are matched by subject id.
RegressionDesign build_design(const std::vector<CoefCurve>& curves, const BSplineBasis& basis_b,
                              const ScalarTable& scalars, const ScalarDesignSpec& spec);

/// Expanded raw (pre-standardization) features of one covariate value.
std::vector<double> hinge_features(double value, const std::vector<double>& knots);

/// integral over the subject domain of X_i(t) beta(t) dt = X*_i J_i beta*.
double cumulative_effect(const CoefCurve& curve, const Eigen::VectorXd& beta_coeffs,
                         const BSplineBasis& beta_basis);

// Delimited-text interchange.
std::vector<CurveObservation> read_curves(const std::filesystem::path& path, const Domain& reference);
void write_curves(const std::filesystem::path& path, const std::vector<CurveObservation>& curves,
                  const std::vector<std::string>& comments = {});
ScalarTable read_scalars(const std::filesystem::path& path);
void write_scalars(const std::filesystem::path& path, const ScalarTable& table,
                   const std::vector<std::string>& comments = {});
void write_design(const std::filesystem::path& path, const RegressionDesign& design,
                  const std::vector<std::string>& comments = {});

/// Parses "linear", "categorical", "pwl:18,24,29" or "spline:K[:lo:hi]".
CovariateRule parse_covariate_rule(const std::string& name, const std::string& text);

}  // namespace basofr
