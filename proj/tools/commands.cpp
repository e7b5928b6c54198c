#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "basofr/archive.hpp"
#include "basofr/errors.hpp"
#include "basofr/table_io.hpp"

namespace basofr::cli {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

std::string fmt(double v) { return format_double(v); }

std::vector<CoefCurve> fit_curves(const std::vector<CurveObservation>& obs, const Domain& dom, int kx) {
  auto basis_x = std::make_shared<const BSplineBasis>(dom, kx);
  std::vector<CoefCurve> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back(fit_curve_coeffs(o, basis_x));
  return out;
}

// Finest partition: every distinct observation time inside the domain.
Partition finest_partition(const std::vector<CurveObservation>& obs, const Domain& dom) {
  std::set<double> pts{dom.lo, dom.hi};
  for (const auto& o : obs) {
    for (double t : o.t) {
      if (t > dom.lo && t < dom.hi) pts.insert(t);
    }
  }
  return Partition::from_grid({pts.begin(), pts.end()});
}

std::string extra(const ArchiveMeta& meta, const std::string& key) {
  auto it = meta.extra.find(key);
  if (it == meta.extra.end()) throw IoError("archive manifest lacks '" + key + "'");
  return it->second;
}

void write_rows_atomically(const fs::path& path, const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows,
                           const std::vector<std::string>& comments) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    TableWriter w(tmp, header, comments);
    for (const auto& r : rows) w.row(r);
    w.close();
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace '" + path.string() + "': " + ec.message());
}

}  // namespace

void cmd_simulate(const RunConfig& config) {
  const SimulationDesign design = config.simulation();
  const int kx = config.get_int("design", "kx");
  const int kb = config.get_int("fit", "kb");
  const int r = config.get_int("simulate", "replicate");
  if (r < 0) throw ConfigError("simulate.replicate must be non-negative");
  const SimulatedDataset data = simulate_dataset(design, kx, kb, r);

  const fs::path dir = config.out_dir();
  ensure_dir(dir);
  const std::vector<std::string> comments{
      config.hash_comment(), "truth=" + design.truth.describe(),
      "noise_sd=" + fmt(data.responses.sigma) + " (variance ratio: sigma^2 = var(signal)/snr)"};
  write_curves(dir / "curves.csv", data.observations, comments);

  ScalarTable scalars;
  scalars.names = {"signal"};
  scalars.columns.resize(1);
  for (std::size_t i = 0; i < data.observations.size(); ++i) {
    scalars.subject_ids.push_back(data.observations[i].subject_id);
    scalars.response.push_back(data.responses.y[i]);
    scalars.columns[0].push_back(fmt(data.signal[i]));
  }
  write_scalars(dir / "scalars.csv", scalars, comments);

  TableWriter truth(dir / "truth.csv", {"t", "beta"}, comments);
  for (double t : design.resolved_grid()) truth.row({fmt(t), fmt(design.truth(t))});
  truth.close();
  config.write_resolved(dir);
}

void cmd_fit(const RunConfig& config) {
  const FitConfig fc = config.fit();
  const Domain dom = config.domain();
  const int kx = config.get_int("design", "kx");
  const int kb = config.get_int("fit", "kb");
  const ScalarDesignSpec spec = config.covariates();

  const auto obs = read_curves(config.io_path("curves", "curves.csv"), dom);
  const ScalarTable scalars = read_scalars(config.io_path("scalars", "scalars.csv"));
  const auto curves = fit_curves(obs, dom, kx);
  const BSplineBasis basis_b(dom, kb);
  const RegressionDesign design = build_design(curves, basis_b, scalars, spec);

  const long total = static_cast<long>(fc.mcmc.burnin) + static_cast<long>(fc.mcmc.draws) * fc.mcmc.thin;
  const long every = std::max(1L, total / 10);
  const PosteriorDraws draws = fit(design, fc, [&](long it, long tot) {
    if (it % every == 0 || it == tot) std::cerr << "fit: iteration " << it << " / " << tot << '\n';
  });

  const fs::path dir = config.out_dir();
  ensure_dir(dir);
  ArchiveMeta meta;
  meta.seed = fc.seed;
  meta.config_hash = config.hash();
  meta.prior = fc.prior;
  meta.extra["kx"] = std::to_string(kx);
  meta.extra["kb"] = std::to_string(kb);
  meta.extra["domain_lo"] = fmt(dom.lo);
  meta.extra["domain_hi"] = fmt(dom.hi);
  write_archive(config.io_path("archive", "draws"), draws, meta);
  write_design(dir / "design.csv", design, {config.hash_comment()});
  config.write_resolved(dir);
}

void cmd_summarize(const RunConfig& settings) {
  const DrawArchive archive = read_archive(settings.io_path("archive", "draws"));
  // basis sizes and domain come from the archive
  RunConfig config = settings;
  config.set("design", "kx", extra(archive.meta, "kx"));
  config.set("fit", "kb", extra(archive.meta, "kb"));
  config.set("design", "domain_lo", extra(archive.meta, "domain_lo"));
  config.set("design", "domain_hi", extra(archive.meta, "domain_hi"));
  const int kx = std::stoi(extra(archive.meta, "kx"));
  const int kb = std::stoi(extra(archive.meta, "kb"));
  const Domain dom{parse_double(extra(archive.meta, "domain_lo"), "domain_lo"),
                   parse_double(extra(archive.meta, "domain_hi"), "domain_hi")};
  const int points = config.get_int("summarize", "grid_points");
  if (points < 2) throw ConfigError("summarize.grid_points must be at least 2");
  const DecisionOptions options = config.decision();
  const bool run_decision = config.get_bool("summarize", "decision");

  const BSplineBasis basis_b(dom, kb);
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) {
    grid[static_cast<std::size_t>(j)] =
        j + 1 == points ? dom.hi : dom.lo + (dom.hi - dom.lo) * j / static_cast<double>(points - 1);
  }
  const BetaSummary sum = summarize_beta(archive.draws.b_star, basis_b, grid);
  const auto ci = ci_labels(sum.lo95, sum.hi95);

  const fs::path dir = config.out_dir();
  ensure_dir(dir);
  const std::vector<std::string> comments{config.hash_comment(), "archive_config_hash=" + archive.meta.config_hash};

  std::optional<DecisionResult> da;
  if (run_decision) {
    const auto obs = read_curves(config.io_path("curves", "curves.csv"), dom);
    const ScalarTable scalars = read_scalars(config.io_path("scalars", "scalars.csv"));
    const auto curves = fit_curves(obs, dom, kx);
    const RegressionDesign design = build_design(curves, basis_b, scalars, config.covariates());
    if (archive.draws.fitted_mean.size() != design.n()) {
      throw ConfigError("archive has " + std::to_string(archive.draws.fitted_mean.size()) +
                        " subjects but the data have " + std::to_string(design.n()));
    }
    da = decision_analysis(curves, finest_partition(obs, dom), design, archive.draws, options);

    const auto& fam = da->family;
    TableWriter path(dir / "path.csv",
                     {"lambda", "levels", "empirical_mse", "mean_d_tilde", "d_lo", "d_hi", "frac_nonpositive",
                      "acceptable", "simplest"},
                     comments);
    for (std::size_t e = 0; e < da->path.entries.size(); ++e) {
      const auto& entry = da->path.entries[e];
      const auto col = fam.d_tilde.col(static_cast<Eigen::Index>(e));
      std::vector<double> d(col.data(), col.data() + col.size());
      std::sort(d.begin(), d.end());
      // inverse-ECDF quantiles, matching the membership count
      auto q = [&](double p) {
        const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(d.size())));
        return d[std::min(d.size() - 1, k == 0 ? 0 : k - 1)];
      };
      path.row({fmt(entry.lambda), std::to_string(entry.num_levels), fmt(entry.empirical_mse), fmt(col.mean()),
                fmt(q(options.epsilon)), fmt(q(1.0 - options.epsilon)), fmt(fam.frac_nonpositive[e]),
                fam.member[e] ? "1" : "0", e == fam.simplest ? "1" : "0"});
    }
    path.close();
  }

  TableWriter windows(dir / "windows.csv", {"selector", "start", "end", "level", "label"}, comments);
  if (da) {
    for (const auto& w : da->windows) {
      windows.row({"da", fmt(w.start), fmt(w.end), fmt(w.level), std::to_string(w.label)});
    }
  }
  for (const auto& w : ci_windows(grid, sum.lo95, sum.hi95, sum.mean)) {
    windows.row({"ci", fmt(w.start), fmt(w.end), fmt(w.level), std::to_string(w.label)});
  }
  windows.close();

  std::vector<std::string> header{"t", "mean", "lo50", "hi50", "lo95", "hi95", "ci_label"};
  if (da) header.insert(header.end(), {"lc", "da_label"});
  std::vector<int> da_lab;
  if (da) da_lab = grid_labels(da->estimate, grid, options.zero_tol);
  TableWriter beta(dir / "beta_summary.csv", header, comments);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    std::vector<std::string> row{fmt(grid[j]),     fmt(sum.mean(i)), fmt(sum.lo50(i)),        fmt(sum.hi50(i)),
                                 fmt(sum.lo95(i)), fmt(sum.hi95(i)), std::to_string(ci[j])};
    if (da) {
      row.push_back(fmt(da->estimate.value(grid[j])));
      row.push_back(std::to_string(da_lab[j]));
    }
    beta.row(row);
  }
  beta.close();
  config.write_resolved(dir);
}

void cmd_evaluate(const RunConfig& config) {
  const SimulationDesign design = config.simulation();
  const fs::path dir = config.out_dir();
  const Table tab = read_table(dir / "beta_summary.csv");
  const auto grid = tab.numeric_column("t");
  const auto g = static_cast<Eigen::Index>(grid.size());
  auto column = [&](const char* name) {
    const auto v = tab.numeric_column(name);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), g));
  };
  auto labels = [&](const char* name) {
    std::vector<int> out;
    for (double v : tab.numeric_column(name)) out.push_back(static_cast<int>(v));
    return out;
  };
  Eigen::VectorXd truth(g);
  for (Eigen::Index j = 0; j < g; ++j) truth(j) = design.truth(grid[static_cast<std::size_t>(j)]);

  std::vector<std::vector<std::string>> rows;
  auto add = [&](const std::string& method, const std::string& metric, double v) {
    rows.push_back({method, metric, fmt(v)});
  };
  const Eigen::VectorXd mean = column("mean");
  const EvalMetrics m = evaluate(grid, mean, column("lo95"), column("hi95"), truth, labels("ci_label"));
  add("posterior", "l2_error", m.l2_error);
  add("posterior", "mean_ci_width", m.mean_ci_width);
  add("posterior", "coverage", m.pointwise_coverage);
  add("ci", "tpr", m.tpr);
  add("ci", "tnr", m.tnr);
  if (tab.column("lc") >= 0) {
    const Eigen::VectorXd lc = column("lc");
    const EvalMetrics d = evaluate(grid, lc, lc, lc, truth, labels("da_label"));
    add("da", "l2_error", d.l2_error);
    add("da", "tpr", d.tpr);
    add("da", "tnr", d.tnr);
  }
  write_rows_atomically(dir / "evaluation.csv", {"method", "metric", "value"}, rows,
                        {config.hash_comment(), "truth=" + design.truth.describe()});
}

int cmd_replicate(const RunConfig& config) {
  const StudyConfig study = config.study();
  const fs::path dir = config.out_dir();
  ensure_dir(dir);
  const fs::path metrics_path = dir / "metrics.csv";
  const fs::path failures_path = dir / "failures.csv";
  const std::string hash = config.hash_comment();

  std::map<int, std::vector<std::vector<std::string>>> done;
  if (fs::exists(metrics_path)) {
    const Table prior = read_table(metrics_path);
    if (std::find(prior.comments.begin(), prior.comments.end(), "# " + hash) == prior.comments.end()) {
      throw ConfigError("'" + metrics_path.string() + "' was produced by a different config; use a new out_dir");
    }
    const int cr = prior.require_column("replicate");
    for (const auto& row : prior.rows) done[std::stoi(row[static_cast<std::size_t>(cr)])].push_back(row);
  }
  std::vector<int> todo;
  for (int r = 0; r < study.design.replicates; ++r) {
    if (!done.count(r)) todo.push_back(r);
  }
  std::cerr << "replicate: " << done.size() << " done, " << todo.size() << " to run\n";
  config.write_resolved(dir);

  std::map<int, std::string> failures;
  const std::vector<std::string> comments{hash, "truth=" + study.design.truth.describe()};
  auto flush = [&] {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [r, rs] : done) rows.insert(rows.end(), rs.begin(), rs.end());
    write_rows_atomically(metrics_path, {"replicate", "method", "metric", "value"}, rows, comments);
    std::vector<std::vector<std::string>> frows;
    for (const auto& [r, e] : failures) frows.push_back({std::to_string(r), e});
    write_rows_atomically(failures_path, {"replicate", "error"}, frows, comments);
  };
  run_study(study, todo, [&](const ReplicateResult& res) {
    if (!res.error.empty()) {
      std::string e = res.error;
      std::replace(e.begin(), e.end(), ',', ';');
      std::replace(e.begin(), e.end(), '\n', ' ');
      failures[res.replicate] = e;
      std::cerr << "replicate " << res.replicate << " failed: " << res.error << '\n';
    } else {
      auto& rows = done[res.replicate];
      for (const auto& m : res.rows) rows.push_back({std::to_string(m.replicate), m.method, m.metric, fmt(m.value)});
      std::cerr << "replicate " << res.replicate << " done\n";
    }
    flush();
  });
  flush();
  return static_cast<int>(failures.size());
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian adaptive scalar-on-function regression"};
  app.require_subcommand(1);

  struct Shared {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::vector<std::string> sets;
  };
  Shared shared;
  std::optional<int> n, replicate, replicates, kb, burnin, draws;
  std::optional<double> snr, epsilon, zero_tol;
  std::optional<std::string> truth, prior, curves, scalars, archive, methods;

  auto add_shared = [&](CLI::App* sub) {
    sub->add_option("--config", shared.config, "INI config file");
    sub->add_option("--seed", shared.seed, "random seed");
    sub->add_option("--out-dir", shared.out_dir, "output directory");
    sub->add_option("--threads", shared.threads, "worker threads (replicate)");
    sub->add_option("--set", shared.sets, "override as section.key=value")->take_all();
  };
  auto* sim = app.add_subcommand("simulate", "simulate one dataset");
  add_shared(sim);
  sim->add_option("--n", n);
  sim->add_option("--snr", snr);
  sim->add_option("--truth", truth, "smooth | locally-constant");
  sim->add_option("--replicate", replicate, "replicate index (selects the RNG stream)");

  auto* fitc = app.add_subcommand("fit", "run the Gibbs sampler and write a draw archive");
  add_shared(fitc);
  fitc->add_option("--prior", prior, "dhs | pspline | local-pspline");
  fitc->add_option("--kb", kb);
  fitc->add_option("--burnin", burnin);
  fitc->add_option("--draws", draws);
  fitc->add_option("--curves", curves);
  fitc->add_option("--scalars", scalars);
  fitc->add_option("--archive", archive);

  auto* summ = app.add_subcommand("summarize", "beta summary, solution path and windows");
  add_shared(summ);
  summ->add_option("--epsilon", epsilon);
  summ->add_option("--zero-tol", zero_tol);
  summ->add_option("--curves", curves);
  summ->add_option("--scalars", scalars);
  summ->add_option("--archive", archive);

  auto* eval = app.add_subcommand("evaluate", "score a beta summary against the simulation truth");
  add_shared(eval);
  eval->add_option("--truth", truth, "smooth | locally-constant");

  auto* rep = app.add_subcommand("replicate", "simulation study over replicates");
  add_shared(rep);
  rep->add_option("--replicates", replicates);
  rep->add_option("--methods", methods, "comma-separated prior list");
  rep->add_option("--n", n);
  rep->add_option("--snr", snr);
  rep->add_option("--truth", truth);
  rep->add_option("--burnin", burnin);
  rep->add_option("--draws", draws);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    RunConfig config;
    if (!shared.config.empty()) config.load(shared.config);
    for (const auto& s : shared.sets) {
      const auto dot = s.find('.');
      const auto eq = s.find('=');
      if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
        throw ConfigError("--set expects section.key=value, got '" + s + "'");
      }
      config.set(s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1));
    }
    if (shared.seed) config.set("run", "seed", std::to_string(*shared.seed));
    if (shared.out_dir) config.set("run", "out_dir", *shared.out_dir);
    if (shared.threads) config.set("run", "threads", std::to_string(*shared.threads));
    if (n) config.set("simulate", "n", std::to_string(*n));
    if (snr) config.set("simulate", "snr", fmt(*snr));
    if (truth) config.set("simulate", "truth", *truth);
    if (replicate) config.set("simulate", "replicate", std::to_string(*replicate));
    if (replicates) config.set("simulate", "replicates", std::to_string(*replicates));
    if (prior) config.set("fit", "prior", *prior);
    if (kb) config.set("fit", "kb", std::to_string(*kb));
    if (burnin) config.set("fit", "burnin", std::to_string(*burnin));
    if (draws) config.set("fit", "draws", std::to_string(*draws));
    if (methods) config.set("fit", "methods", *methods);
    if (curves) config.set("io", "curves", *curves);
    if (scalars) config.set("io", "scalars", *scalars);
    if (archive) config.set("io", "archive", *archive);
    if (epsilon) config.set("summarize", "epsilon", fmt(*epsilon));
    if (zero_tol) config.set("summarize", "zero_tol", fmt(*zero_tol));

    config.validate();
    if (sim->parsed()) cmd_simulate(config);
    if (fitc->parsed()) cmd_fit(config);
    if (summ->parsed()) cmd_summarize(config);
    if (eval->parsed()) cmd_evaluate(config);
    if (rep->parsed()) {
      const int failed = cmd_replicate(config);
      if (failed > 0) std::cerr << failed << " replicate(s) failed; see failures.csv\n";
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}

}  // namespace basofr::cli
