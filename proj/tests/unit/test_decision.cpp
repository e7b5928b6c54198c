#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "basofr/decision.hpp"
#include "basofr/study.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace basofr;

namespace {

SolutionPath hand_path(const std::vector<int>& levels, const std::vector<double>& mse) {
  SolutionPath p;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    PathEntry e;
    e.lambda = static_cast<double>(levels.size() - j);
    e.delta = Eigen::VectorXd::Zero(2);
    e.num_levels = levels[j];
    e.empirical_mse = mse[j];
    p.entries.push_back(e);
  }
  return p;
}

}  // namespace

TEST_SUITE("decision") {
TEST_CASE("partition cells and lookup") {
  const auto p = Partition::from_grid({0.0, 0.25, 0.5, 1.0});
  CHECK(p.size() == 3);
  CHECK(p.locate(0.0) == 0);
  CHECK(p.locate(0.25) == 1);
  CHECK(p.locate(0.7) == 2);
  CHECK(p.locate(1.0) == 2);
  CHECK(p.locate(1.01) == -1);
  CHECK(p.cell(1) == Domain{0.25, 0.5});
  CHECK_THROWS(Partition::from_grid({0.0, 0.5, 0.5}));
  CHECK_THROWS(Partition::from_grid({1.0}));
}

TEST_CASE("aggregation integrates each curve over each cell") {
  auto basis = std::make_shared<const BSplineBasis>(Domain{0.0, 1.0}, 9);
  Rng rng = make_rng(1);
  std::vector<CoefCurve> curves;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd c(9);
    for (auto& v : c) v = std_normal(rng);
    curves.push_back({"c" + std::to_string(i), c, basis, i == 2 ? Domain{0.1, 0.8} : Domain{0.0, 1.0}});
  }
  const auto part = Partition::from_grid({0.0, 0.2, 0.45, 0.9, 1.0});
  const auto agg = aggregate(curves, part);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 4; ++k) {
      const auto& c = curves[static_cast<std::size_t>(i)];
      const double lo = std::max(part.cell(k).lo, c.subject_domain.lo);
      const double hi = std::min(part.cell(k).hi, c.subject_domain.hi);
      const double ref = hi > lo ? oracle::riemann([&](double t) { return c(t); }, lo, hi, 200000) : 0.0;
      CHECK(agg(i, k) == doctest::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("empirical and predictive losses match direct loops") {
  Rng rng = make_rng(2);
  Eigen::MatrixXd agg(7, 3);
  for (auto& v : agg.reshaped()) v = std_normal(rng);
  Eigen::VectorXd y(7);
  for (auto& v : y) v = std_normal(rng);
  SolutionPath path;
  for (int j = 0; j < 4; ++j) {
    PathEntry e;
    e.delta = Eigen::VectorXd::Constant(3, 0.3 * j) + Eigen::VectorXd::LinSpaced(3, 0.0, 0.1 * j);
    path.entries.push_back(e);
  }
  auto loop_mse = [&](const Eigen::VectorXd& target, const Eigen::VectorXd& d) {
    double s = 0.0;
    for (int i = 0; i < 7; ++i) {
      double f = 0.0;
      for (int k = 0; k < 3; ++k) f += agg(i, k) * d(k);
      s += (target(i) - f) * (target(i) - f);
    }
    return s / 7.0;
  };
  CHECK(empirical_mse(path.entries[2].delta, y, agg) == doctest::Approx(loop_mse(y, path.entries[2].delta)));

  Eigen::MatrixXd pred(5, 7);
  for (auto& v : pred.reshaped()) v = std_normal(rng);
  const auto e = predictive_mse_draws(path, agg, pred);
  for (int s = 0; s < 5; ++s)
    for (int j = 0; j < 4; ++j)
      CHECK(e(s, j) == doctest::Approx(loop_mse(pred.row(s).transpose(), path.entries[static_cast<std::size_t>(j)].delta)));

  // the regenerating overload draws X** B* + sigma z in draw-major order
  auto design = fixture::tiny_design(7, 4, 0, 3);
  PosteriorDraws d;
  d.b_star.resize(5, 4);
  for (auto& v : d.b_star.reshaped()) v = std_normal(rng);
  d.sigma2 = (Eigen::VectorXd(5) << 0.1, 0.5, 1.0, 2.0, 0.01).finished();
  Rng r1 = make_rng(4);
  const auto regen = predictive_mse_draws(path, agg, d, design, r1);
  Rng r2 = make_rng(4);
  Eigen::MatrixXd explicit_pred(5, 7);
  for (int s = 0; s < 5; ++s) {
    const Eigen::VectorXd mean = design.x_star_star * d.b_star.row(s).transpose();
    for (int i = 0; i < 7; ++i) explicit_pred(s, i) = mean(i) + std::sqrt(d.sigma2(s)) * std_normal(r2);
  }
  CHECK((regen - predictive_mse_draws(path, agg, explicit_pred)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("acceptable family follows the counting rule") {
  // lambda decreasing; entry 3 minimizes the empirical loss
  const auto path = hand_path({1, 2, 3, 4, 6}, {5.0, 3.0, 2.5, 2.0, 2.2});
  Rng rng = make_rng(5);
  const int s_count = 50;
  Eigen::MatrixXd e(s_count, 5);
  for (int s = 0; s < s_count; ++s) {
    e(s, 3) = 1.0 + uniform01(rng);
    e(s, 0) = e(s, 3) * 1.5;                                      // never better
    e(s, 1) = e(s, 3) * (s < 4 ? 0.9 : 1.1);                      // better in 4 of 50
    e(s, 2) = e(s, 3) * (s < 5 ? 0.95 : 1.05);                    // better in 5 of 50
    e(s, 4) = s % 2 == 0 ? e(s, 3) : e(s, 3) * 1.01;              // ties count as nonpositive
  }
  for (double eps : {0.0, 0.08, 0.1, 0.5, 1.0}) {
    const auto fam = acceptable_family(path, e, eps);
    CHECK(fam.lambda_min == 3u);
    std::vector<char> expect(5);
    std::size_t simplest = 3;
    for (int j = 0; j < 5; ++j) {
      int count = 0;
      for (int s = 0; s < s_count; ++s) {
        const double d = j == 3 ? 0.0 : 100.0 * (e(s, j) - e(s, 3)) / e(s, 3);
        CHECK(fam.d_tilde(s, j) == doctest::Approx(d));
        if (d <= 0.0) ++count;
      }
      expect[static_cast<std::size_t>(j)] = count >= eps * s_count;
      CHECK(fam.frac_nonpositive[static_cast<std::size_t>(j)] == doctest::Approx(count / 50.0));
    }
    for (std::size_t j = 0; j < 5; ++j) {
      if (expect[j] && path.entries[j].num_levels < path.entries[simplest].num_levels) simplest = j;
    }
    CHECK(fam.member == expect);
    CHECK(fam.member[3]);
    CHECK(fam.simplest == simplest);
  }
  CHECK(acceptable_family(path, e, 0.08).simplest == 1u);
  CHECK(acceptable_family(path, e, 0.1).simplest == 2u);
  CHECK(acceptable_family(path, e, 1.0).simplest == 3u);
}

TEST_CASE("simplest member ties go to the larger lambda") {
  const auto path = hand_path({2, 2, 3}, {3.0, 2.0, 1.0});
  Eigen::MatrixXd e = Eigen::MatrixXd::Ones(4, 3);
  const auto fam = acceptable_family(path, e, 0.5);
  CHECK(fam.lambda_min == 2u);
  CHECK(fam.simplest == 0u);
}

TEST_CASE("windows merge runs with equal labels") {
  const auto part = Partition::from_grid({0.0, 0.1, 0.2, 0.5, 0.7, 1.0});
  const Eigen::VectorXd delta = (Eigen::VectorXd(5) << 2.0, 2.0, 1.0, 0.0, -3.0).finished();
  const auto est = make_estimate(part, delta, 0.4);
  REQUIRE(est.runs.size() == 4u);
  CHECK(est.runs[0].end == doctest::Approx(0.2));
  const auto win = extract_windows(est, 0.0);
  REQUIRE(win.size() == 3u);
  CHECK(win[0].label == 1);
  CHECK(win[0].end == doctest::Approx(0.5));
  CHECK(win[0].level == doctest::Approx((2.0 * 0.2 + 1.0 * 0.3) / 0.5));
  CHECK(win[1].label == 0);
  CHECK(win[2].label == -1);
  CHECK(extract_windows(est, 1.5).size() == 3u);
  CHECK(grid_labels(est, {0.05, 0.3, 0.6, 1.0}, 0.0) == std::vector<int>{1, 1, 0, -1});
  CHECK(est.value(0.15) == 2.0);
  CHECK_THROWS(est.value(1.2));
}

TEST_CASE("interval selection and its windows") {
  const Eigen::VectorXd lo = (Eigen::VectorXd(5) << 0.1, 0.2, -0.1, -2.0, -1.0).finished();
  const Eigen::VectorXd hi = (Eigen::VectorXd(5) << 1.0, 1.0, 0.3, -0.5, -0.1).finished();
  const Eigen::VectorXd mean = (lo + hi) / 2.0;
  CHECK(ci_labels(lo, hi) == std::vector<int>{1, 1, 0, -1, -1});
  const auto w = ci_windows({0.0, 0.1, 0.2, 0.3, 0.4}, lo, hi, mean);
  REQUIRE(w.size() == 3u);
  CHECK(w[0].end == doctest::Approx(0.1));
  CHECK(w[0].level == doctest::Approx(0.575));
  CHECK(w[2].start == doctest::Approx(0.3));
}

TEST_CASE("path from a locally constant target") {
  Rng rng = make_rng(6);
  Eigen::MatrixXd agg(80, 6);
  for (auto& v : agg.reshaped()) v = uniform01(rng);
  const Eigen::VectorXd truth = (Eigen::VectorXd(6) << 1, 1, 1, -1, -1, -1).finished();
  const Eigen::VectorXd target = agg * truth;
  Eigen::VectorXd y = target;
  for (auto& v : y) v += 0.1 * std_normal(rng);
  const auto path = decision_path(agg, target, y, 100);
  REQUIRE(!path.entries.empty());
  CHECK(path.entries.front().num_levels == 1);
  CHECK((path.entries.back().delta - truth).cwiseAbs().maxCoeff() < 1e-6);
  bool has_two = false;
  for (const auto& e : path.entries) {
    if (e.num_levels == 2) has_two = true;
    CHECK(e.empirical_mse == doctest::Approx(empirical_mse(e.delta, y, agg)));
  }
  CHECK(has_two);
  for (std::size_t j = 1; j < path.entries.size(); ++j) CHECK(path.entries[j].lambda < path.entries[j - 1].lambda);
  const auto capped = decision_path(agg, target, y, 4);
  CHECK(capped.entries.size() <= 4u);
}

TEST_CASE("fine partitions of low-rank curves keep the path bounded") {
  // 100 cells from curves on a 12-term basis: the aggregated design has rank <= 12
  SimulationDesign d;
  d.n = 200;
  d.seed = 5;
  d.truth.kind = Truth::Kind::LocallyConstant;
  const auto grid = d.resolved_grid();
  const auto data = simulate_dataset(d, 12, 12, 0);
  const Eigen::MatrixXd agg = aggregate(data.curves, Partition::from_grid(grid));
  Eigen::VectorXd truth(agg.cols());
  for (Eigen::Index q = 0; q < agg.cols(); ++q) {
    truth(q) = d.truth(0.5 * (grid[static_cast<std::size_t>(q)] + grid[static_cast<std::size_t>(q) + 1]));
  }
  const Eigen::VectorXd target = agg * truth;
  const auto path = decision_path(agg, target, target, 1000);
  CHECK(path.rank_deficient);
  double worst = 0.0;
  for (const auto& e : path.entries) worst = std::max(worst, e.delta.cwiseAbs().maxCoeff());
  CHECK(worst <= 2.0 * truth.cwiseAbs().maxCoeff());
}
}
