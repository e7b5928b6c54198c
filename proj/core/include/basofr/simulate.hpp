#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "basofr/basis.hpp"
#include "basofr/funcdata.hpp"
#include "basofr/rng.hpp"

namespace basofr {

/// Squared-exponential Gaussian process for the functional covariates.
struct GpSpec {
  bool seasonal = true;           // mean sin(2 pi t / period + phase_i), phase_i ~ U(0, 1)
  double period = 365.0 / 295.0;
  double sigma_x = 0.7;
  double length_scale = 0.01;
};

/// True regression function beta(t).
struct Truth {
  enum class Kind { Smooth, LocallyConstant };
  Kind kind = Kind::Smooth;
  // LocallyConstant: levels[j] on [breakpoints[j-1], breakpoints[j]). The
  // default three-region shape (+, 0, -) is a stand-in for a design that is
  // only available graphically; override as needed.
  std::vector<double> breakpoints{1.0 / 3.0, 2.0 / 3.0};
  std::vector<double> levels{1.0, 0.0, -1.0};

  [[nodiscard]] double operator()(double t) const;
  void validate() const;
  [[nodiscard]] std::string describe() const;
};

/// 8 / (2 + e^{20-60t} + e^{60t-20}) - 12 / (2 + e^{40-60t} + e^{60t-40})
double true_beta_smooth(double t);

struct SimulationDesign {
  int n = 500;
  double snr = 5.0;
  std::vector<double> grid;  // empty means 0, 0.01, ..., 1
  GpSpec gp;
  Truth truth;
  int replicates = 1;
  std::uint64_t seed = 0;

  [[nodiscard]] std::vector<double> resolved_grid() const;
  void validate() const;
};

/// lo, lo + step, ..., hi (endpoint included; computed by index to avoid drift).
std::vector<double> regular_grid(double lo, double hi, double step);

/// Curves on the design grid; subject domains span the whole grid.
std::vector<CurveObservation> gen_curves(const SimulationDesign& design, Rng& rng);

/// Integrated signal integral X_i beta for each curve.
///  Smooth truth: beta is projected on `beta_basis` (least squares on a fine
///  grid) and combined with the curve through the cross-Gram.
///  Locally constant truth: exact spline quadrature split at the breakpoints.
std::vector<double> true_signal(const std::vector<CoefCurve>& curves, const Truth& truth,
                                const BSplineBasis& beta_basis);

/// Trapezoid rule on the raw observations; an independent check on true_signal.
std::vector<double> trapezoid_signal(const std::vector<CurveObservation>& curves, const Truth& truth);

struct SimulatedResponses {
  std::vector<double> y;
  double sigma = 0.0;
};

/// y_i = signal_i + N(0, sigma^2) with sigma^2 = var(signal) / snr.
SimulatedResponses gen_responses(const std::vector<double>& signal, double snr, Rng& rng);

struct EvalMetrics {
  double l2_error = 0.0;
  double mean_ci_width = 0.0;
  double pointwise_coverage = 0.0;
  double tpr = 0.0;  // NaN when the truth has no positive grid points
  double tnr = 0.0;  // NaN when the truth has no negative grid points
  bool infinite_width = false;
};

/// Trapezoid L2 distance between two curves on a grid.
double l2_distance(const std::vector<double>& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Metrics on a common grid. `labels` are +1/0/-1 selections per grid point.
EvalMetrics evaluate(const std::vector<double>& grid, const Eigen::VectorXd& estimate, const Eigen::VectorXd& lo95,
                     const Eigen::VectorXd& hi95, const Eigen::VectorXd& truth, const std::vector<int>& labels);

}  // namespace basofr
