#include <doctest.h>

#include <cmath>
#include <random>

#include "basofr/basis.hpp"
#include "oracles.hpp"

using namespace basofr;

TEST_SUITE("basis") {
TEST_CASE("knot layout for the simulation and application sizes") {
  const BSplineBasis b({0.0, 1.0}, 53);
  CHECK(b.size() == 53);
  CHECK(b.num_interior_knots() == 49);
  CHECK(b.num_spans() == 50);
  CHECK(b.knots().size() == 57u);
  const auto br = b.breakpoints();
  for (std::size_t j = 1; j < br.size(); ++j) CHECK(br[j] - br[j - 1] == doctest::Approx(0.02).epsilon(1e-12));

  const BSplineBasis app({1.0, 295.0}, 103);
  CHECK(app.size() == 103);
  CHECK(app.eval(1.0)(0) == doctest::Approx(1.0));
  CHECK(app.eval(295.0)(102) == doctest::Approx(1.0));
}

TEST_CASE("minimal cubic basis is the Bernstein basis") {
  const BSplineBasis b({0.0, 1.0}, 4);
  CHECK(b.num_spans() == 1);
  for (double t : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    const auto v = b.eval(t);
    const double s = 1.0 - t;
    CHECK(v(0) == doctest::Approx(s * s * s).epsilon(1e-14));
    CHECK(v(1) == doctest::Approx(3 * t * s * s).epsilon(1e-14));
    CHECK(v(2) == doctest::Approx(3 * t * t * s).epsilon(1e-14));
    CHECK(v(3) == doctest::Approx(t * t * t).epsilon(1e-14));
  }
}

TEST_CASE("construction errors") {
  CHECK_THROWS(BSplineBasis({0.0, 1.0}, 3));
  CHECK_THROWS(BSplineBasis({1.0, 1.0}, 10));
  CHECK_THROWS(BSplineBasis({0.0, 1.0}, 10).eval(1.5));
  CHECK_THROWS(second_diff(2));
}

TEST_CASE("partition of unity, locality and nonnegativity at random points") {
  const BSplineBasis b({0.0, 1.0}, 53);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < 1000; ++r) {
    const auto v = b.eval(u(rng));
    CHECK(std::abs(v.sum() - 1.0) < 1e-12);
    CHECK((v.array() >= 0.0).all());
    CHECK((v.array() != 0.0).count() <= 4);
  }
  const auto lo = b.eval(0.0);
  CHECK(lo(0) == 1.0);
  CHECK(lo.tail(52).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("values agree with the Cox-de Boor recursion") {
  const BSplineBasis b({-1.0, 2.0}, 12);
  const auto knots = oracle::clamped_knots(-1.0, 2.0, 12, 3);
  for (double t : {-1.0, -0.77, 0.0, 0.5, 1.234, 1.99, 2.0}) {
    const auto v = b.eval(t);
    for (int j = 0; j < 12; ++j) CHECK(v(j) == doctest::Approx(oracle::cox_de_boor(knots, j, 3, t)).epsilon(1e-13));
  }
}

TEST_CASE("exactly three nonzero cubic values at an interior knot") {
  const BSplineBasis b({0.0, 1.0}, 10);
  const auto knots = oracle::clamped_knots(0.0, 1.0, 10, 3);
  const double t = b.breakpoints()[3];
  const auto v = b.eval(t);
  int nz = 0;
  for (int j = 0; j < 10; ++j) {
    const double ref = oracle::cox_de_boor(knots, j, 3, t);
    CHECK(v(j) == doctest::Approx(ref).epsilon(1e-13));
    if (ref > 1e-15) ++nz;
  }
  CHECK(nz == 3);
  CHECK((v.array().abs() > 1e-15).count() == 3);
}

TEST_CASE("cross-Gram matches a Riemann oracle and is symmetric PSD on one basis") {
  const BSplineBasis bx({0.0, 1.0}, 9);
  const BSplineBasis bb({0.0, 1.0}, 7);
  const Domain sub{0.13, 0.71};
  const auto j = cross_gram(bx, bb, sub).values;
  for (int a = 0; a < 9; ++a) {
    for (int c = 0; c < 7; ++c) {
      const double ref = oracle::riemann([&](double t) { return bx.eval(t)(a) * bb.eval(t)(c); }, sub.lo, sub.hi, 100000);
      CHECK(std::abs(j(a, c) - ref) <= 1e-6 * std::max(std::abs(ref), 1e-3));
    }
  }
  const auto g = cross_gram(bx, bx, {0.0, 1.0}).values;
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().minCoeff() > -1e-14);
  // disjoint supports
  const BSplineBasis big({0.0, 1.0}, 30);
  const auto gb = cross_gram(big, big, {0.0, 1.0}).values;
  CHECK(gb(0, 10) == 0.0);
  CHECK_THROWS(cross_gram(bx, bb, {0.5, 1.5}));
}

TEST_CASE("basis integrals over a subdomain") {
  const BSplineBasis b({0.0, 2.0}, 8);
  const auto v = basis_integrals(b, {0.3, 1.7});
  CHECK(v.sum() == doctest::Approx(1.4).epsilon(1e-13));
  for (int j = 0; j < 8; ++j) {
    const double ref = oracle::riemann([&](double t) { return b.eval(t)(j); }, 0.3, 1.7, 100000);
    CHECK(v(j) == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("second-difference operator") {
  Eigen::MatrixXd expect(4, 4);
  expect << 1, 0, 0, 0, 1, -2, 1, 0, 0, 1, -2, 1, 0, 0, 0, 1;
  CHECK(second_diff(4) == expect);
  for (int k = 3; k <= 200; ++k) {
    const auto d = second_diff(k);
    REQUIRE(d == oracle::second_difference(k));
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
    CHECK(lu.isInvertible());
  }
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(9, 2.5);
  const Eigen::VectorXd dc = second_diff(9) * c;
  CHECK(dc(0) == 2.5);
  CHECK(dc(8) == 2.5);
  CHECK(dc.segment(1, 7).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd affine(9);
  for (int i = 0; i < 9; ++i) affine(i) = 3.0 - 0.5 * i;
  CHECK(interior_second_differences(affine).cwiseAbs().maxCoeff() < 1e-14);
}
}
