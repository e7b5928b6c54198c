#include <doctest.h>

#include <algorithm>
#include <set>

#include "basofr/study.hpp"

using namespace basofr;

namespace {

StudyConfig small_config() {
  StudyConfig c;
  c.design.n = 60;
  c.design.seed = 5;
  c.kx = 12;
  c.kb = 10;
  c.mcmc = {40, 40, 1};
  c.decision = true;
  return c;
}

}  // namespace

TEST_SUITE("study") {
TEST_CASE("replicates are reproducible and independent of the thread count") {
  auto c = small_config();
  const auto one = run_study(c, {0, 1, 2});
  c.threads = 3;
  std::vector<int> order;
  const auto three = run_study(c, {2, 0, 1}, [&](const ReplicateResult& r) { order.push_back(r.replicate); });
  REQUIRE(one.size() == 3u);
  REQUIRE(three.size() == 3u);
  CHECK(order.size() == 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(one[r].error.empty());
    CHECK(three[r].replicate == static_cast<int>(r));
    REQUIRE(one[r].rows.size() == three[r].rows.size());
    for (std::size_t k = 0; k < one[r].rows.size(); ++k) {
      CHECK(one[r].rows[k].metric == three[r].rows[k].metric);
      CHECK((one[r].rows[k].value == three[r].rows[k].value ||
             (std::isnan(one[r].rows[k].value) && std::isnan(three[r].rows[k].value))));
    }
  }
  CHECK(one[0].rows.front().value != one[1].rows.front().value);
}

TEST_CASE("every method reports every metric") {
  const auto r = run_replicate(small_config(), 0);
  REQUIRE(r.error.empty());
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : r.rows) seen.insert({row.method, row.metric});
  for (const std::string m : {"dhs", "pspline", "local-pspline"}) {
    for (const std::string k : {"l2_error", "mean_ci_width", "coverage", "ci_tpr", "ci_tnr"}) {
      CHECK(seen.count({m, k}) == 1u);
    }
  }
  for (const std::string k : {"da_tpr", "da_tnr", "da_l2_error", "da_lambda", "da_levels"}) CHECK(seen.count({"dhs", k}) == 1u);
}

TEST_CASE("failures are captured per replicate") {
  auto c = small_config();
  c.design.truth.kind = Truth::Kind::LocallyConstant;
  c.design.truth.levels = {0.0, 0.0, 0.0};  // no signal to scale noise by
  const auto r = run_replicate(c, 0);
  CHECK(!r.error.empty());
}
}
