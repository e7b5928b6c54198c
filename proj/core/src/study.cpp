#include "basofr/study.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "basofr/errors.hpp"

namespace basofr {

void StudyConfig::validate() const {
  design.validate();
  if (methods.empty()) throw ConfigError("study needs at least one method");
  if (kx < 4 || kb < 4) throw ConfigError("kx and kb must be at least 4");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (decision && std::find(methods.begin(), methods.end(), PriorKind::Dhs) == methods.end()) {
    throw ConfigError("window selection requires the dhs method");
  }
  FitConfig fc;
  fc.mcmc = mcmc;
  fc.hyper = hyper;
  fc.dhs = dhs;
  fc.validate();
}

SimulatedDataset simulate_dataset(const SimulationDesign& design, int kx, int kb, int replicate) {
  design.validate();
  const auto grid = design.resolved_grid();
  const Domain dom{grid.front(), grid.back()};
  Rng rng = make_rng(design.seed, {static_cast<std::uint64_t>(replicate), 1});
  SimulatedDataset out;
  out.observations = gen_curves(design, rng);
  auto basis_x = std::make_shared<const BSplineBasis>(dom, kx);
  const BSplineBasis basis_b(dom, kb);
  out.curves.reserve(out.observations.size());
  for (const auto& o : out.observations) out.curves.push_back(fit_curve_coeffs(o, basis_x));
  out.signal = true_signal(out.curves, design.truth, basis_b);
  out.responses = gen_responses(out.signal, design.snr, rng);
  return out;
}

ReplicateResult run_replicate(const StudyConfig& config, int replicate) {
  ReplicateResult res;
  res.replicate = replicate;
  try {
    const auto& design = config.design;
    const auto grid = design.resolved_grid();
    const Domain dom{grid.front(), grid.back()};
    const BSplineBasis basis_b(dom, config.kb);
    const SimulatedDataset data = simulate_dataset(design, config.kx, config.kb, replicate);
    const auto& curves = data.curves;
    const auto& resp = data.responses;
    const RegressionDesign reg = build_design(curves, basis_b, resp.y);

    Eigen::VectorXd truth(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j) truth(static_cast<Eigen::Index>(j)) = design.truth(grid[j]);

    auto add = [&](const std::string& method, const std::string& metric, double v) {
      res.rows.push_back({replicate, method, metric, v});
    };
    add("data", "sigma", resp.sigma);

    for (PriorKind kind : config.methods) {
      FitConfig fc;
      fc.prior = kind;
      fc.mcmc = config.mcmc;
      fc.hyper = config.hyper;
      fc.dhs = config.dhs;
      fc.seed = make_rng(design.seed, {static_cast<std::uint64_t>(replicate), 2,
                                       static_cast<std::uint64_t>(kind)})();
      const PosteriorDraws draws = fit(reg, fc);
      const BetaSummary sum = summarize_beta(draws.b_star, basis_b, grid);
      const auto labels = ci_labels(sum.lo95, sum.hi95);
      const EvalMetrics m = evaluate(grid, sum.mean, sum.lo95, sum.hi95, truth, labels);
      const std::string name = to_string(kind);
      add(name, "l2_error", m.l2_error);
      add(name, "mean_ci_width", m.mean_ci_width);
      add(name, "coverage", m.pointwise_coverage);
      add(name, "ci_tpr", m.tpr);
      add(name, "ci_tnr", m.tnr);

      if (config.decision && kind == PriorKind::Dhs) {
        DecisionOptions opt = config.decision_options;
        opt.seed = make_rng(design.seed, {static_cast<std::uint64_t>(replicate), 3})();
        const auto da = decision_analysis(curves, Partition::from_grid(grid), reg, draws, opt);
        Eigen::VectorXd lc(truth.size());
        for (std::size_t j = 0; j < grid.size(); ++j) lc(static_cast<Eigen::Index>(j)) = da.estimate.value(grid[j]);
        const auto da_labels = grid_labels(da.estimate, grid, opt.zero_tol);
        const EvalMetrics dm = evaluate(grid, lc, lc, lc, truth, da_labels);
        add(name, "da_tpr", dm.tpr);
        add(name, "da_tnr", dm.tnr);
        add(name, "da_l2_error", dm.l2_error);
        add(name, "da_lambda", da.estimate.lambda);
        add(name, "da_levels", static_cast<double>(da.estimate.runs.size()));
        add(name, "da_windows", static_cast<double>(da.windows.size()));
      }
    }
  } catch (const std::exception& e) {
    res.rows.clear();
    res.error = e.what();
  }
  return res;
}

std::vector<ReplicateResult> run_study(const StudyConfig& config, const std::vector<int>& replicates,
                                       const ReplicateCallback& on_done) {
  config.validate();
  std::vector<ReplicateResult> results(replicates.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= replicates.size()) return;
      results[j] = run_replicate(config, replicates[j]);
      if (on_done) {
        std::lock_guard<std::mutex> lock(mu);
        on_done(results[j]);
      }
    }
  };
  const int nt = std::min<int>(config.threads, static_cast<int>(std::max<std::size_t>(replicates.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.replicate < b.replicate; });
  return results;
}

}  // namespace basofr
