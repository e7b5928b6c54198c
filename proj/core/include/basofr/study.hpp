#pragma once

#include <functional>
#include <string>
#include <vector>

#include "basofr/decision.hpp"
#include "basofr/gibbs.hpp"
#include "basofr/simulate.hpp"

namespace basofr {

struct StudyConfig {
  SimulationDesign design;
  std::vector<PriorKind> methods{PriorKind::Dhs, PriorKind::GlobalPspline, PriorKind::LocalPspline};
  int kx = 53;
  int kb = 53;
  McmcConfig mcmc;
  Hyperparameters hyper;
  DhsConfig dhs;
  bool decision = false;  // run the window-selection analysis on DHS fits
  DecisionOptions decision_options;
  int threads = 1;

  void validate() const;
};

struct SimulatedDataset {
  std::vector<CurveObservation> observations;
  std::vector<CoefCurve> curves;  // fitted on a kx-term basis
  std::vector<double> signal;     // noiseless integral term
  SimulatedResponses responses;
};

/// Replicate `replicate` of the design. The smooth truth is projected on a
/// kb-term basis, as the estimator sees it.
SimulatedDataset simulate_dataset(const SimulationDesign& design, int kx, int kb, int replicate);

/// One tidy output row.
struct MetricRow {
  int replicate = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
};

struct ReplicateResult {
  int replicate = 0;
  std::vector<MetricRow> rows;
  std::string error;  // empty on success
};

/// Simulate, fit every method and score one replicate. Streams derive from
/// (seed, replicate) only, so results do not depend on scheduling.
ReplicateResult run_replicate(const StudyConfig& config, int replicate);

using ReplicateCallback = std::function<void(const ReplicateResult&)>;

/// Runs the given replicate indices on a pool of `config.threads` workers.
/// Per-replicate failures are captured in the result. Output is ordered by
/// replicate index; the callback fires as each replicate finishes (serialized).
std::vector<ReplicateResult> run_study(const StudyConfig& config, const std::vector<int>& replicates,
                                       const ReplicateCallback& on_done = {});

}  // namespace basofr
