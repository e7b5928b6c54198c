#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "basofr/funcdata.hpp"
#include "basofr/rng.hpp"

namespace fixture {

// Hand-built regression with random X**, `extra` penalized scalar columns
// and a trailing intercept.
inline basofr::RegressionDesign tiny_design(Eigen::Index n, Eigen::Index kb, Eigen::Index extra, std::uint64_t seed,
                                            double noise = 0.3) {
  basofr::Rng rng = basofr::make_rng(seed);
  basofr::RegressionDesign d;
  d.x_star_star.resize(n, kb);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < kb; ++k) d.x_star_star(i, k) = basofr::std_normal(rng);
  d.z.resize(n, extra + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < extra; ++j) d.z(i, j) = basofr::std_normal(rng);
    d.z(i, extra) = 1.0;
  }
  d.penalized.assign(static_cast<std::size_t>(extra + 1), true);
  d.penalized.back() = false;
  for (Eigen::Index j = 0; j <= extra; ++j) d.z_names.push_back(j == extra ? "intercept" : "z" + std::to_string(j));
  d.z_center = Eigen::VectorXd::Zero(extra + 1);
  d.z_scale = Eigen::VectorXd::Ones(extra + 1);
  Eigen::VectorXd b(kb);
  for (Eigen::Index k = 0; k < kb; ++k) b(k) = std::sin(0.7 * static_cast<double>(k));
  d.y = d.x_star_star * b;
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y(i) += 0.5 + noise * basofr::std_normal(rng);
    d.subject_ids.push_back("s" + std::to_string(i));
    d.subject_domains.push_back({0.0, 1.0});
  }
  return d;
}

inline basofr::SplineBlock tiny_spline(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  basofr::Rng rng = basofr::make_rng(seed);
  basofr::SplineBlock s;
  s.name = "g";
  s.values.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) s.values(i, j) = basofr::std_normal(rng);
  s.column_means = Eigen::RowVectorXd::Zero(k);
  return s;
}

}  // namespace fixture
