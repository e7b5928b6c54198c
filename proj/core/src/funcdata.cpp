#include "basofr/funcdata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "basofr/errors.hpp"

namespace basofr {

CoefCurve fit_curve_coeffs(const CurveObservation& obs,
                           const std::shared_ptr<const BSplineBasis>& basis_x) {
  if (!basis_x) throw std::invalid_argument("fit_curve_coeffs: null basis");
  const auto& basis = *basis_x;
  const std::string who = "subject '" + obs.subject_id + "'";
  if (obs.t.size() != obs.x.size()) throw std::invalid_argument(who + ": t and x lengths differ");
  if (!obs.subject_domain.valid()) throw std::invalid_argument(who + ": degenerate subject domain");
  const double tol = 1e-12 * basis.domain().length();
  if (!basis.domain().contains(obs.subject_domain, tol)) {
    throw std::invalid_argument(who + ": subject domain outside the basis domain");
  }
  for (std::size_t j = 0; j < obs.t.size(); ++j) {
    if (!std::isfinite(obs.t[j]) || !std::isfinite(obs.x[j])) {
      throw std::invalid_argument(who + ": non-finite observation");
    }
    if (!obs.subject_domain.contains(obs.t[j], tol)) {
      throw std::invalid_argument(who + ": observation point outside the subject domain");
    }
  }

  std::vector<int> active;
  for (int j = 0; j < basis.size(); ++j) {
    const Domain s = basis.support(j);
    if (s.lo < obs.subject_domain.hi && s.hi > obs.subject_domain.lo) active.push_back(j);
  }
  const auto m = static_cast<Eigen::Index>(obs.t.size());
  const auto k = static_cast<Eigen::Index>(active.size());
  if (m < k) {
    throw NumericalError(who + ": " + std::to_string(m) + " observations for " + std::to_string(k) +
                         " basis coefficients");
  }
  const Eigen::MatrixXd full = basis.eval_matrix(obs.t);
  Eigen::MatrixXd design(m, k);
  for (Eigen::Index c = 0; c < k; ++c) design.col(c) = full.col(active[static_cast<std::size_t>(c)]);
  const Eigen::Map<const Eigen::VectorXd> x(obs.x.data(), m);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k) {
    throw NumericalError(who + ": curve design is rank deficient (rank " + std::to_string(qr.rank()) +
                         " < " + std::to_string(k) + ")");
  }
  const Eigen::VectorXd sol = qr.solve(x);

  CoefCurve out;
  out.subject_id = obs.subject_id;
  out.basis = basis_x;
  out.subject_domain = obs.subject_domain;
  out.coeffs = Eigen::VectorXd::Zero(basis.size());
  for (Eigen::Index c = 0; c < k; ++c) out.coeffs(active[static_cast<std::size_t>(c)]) = sol(c);
  return out;
}

namespace {

struct DomainKey {
  double lo;
  double hi;
  bool operator<(const DomainKey& o) const { return lo < o.lo || (lo == o.lo && hi < o.hi); }
};

Eigen::MatrixXd functional_rows(const std::vector<CoefCurve>& curves, const BSplineBasis& basis_b) {
  Eigen::MatrixXd xss(static_cast<Eigen::Index>(curves.size()), basis_b.size());
  // Subjects sharing a domain and basis share J_i.
  std::map<std::pair<const BSplineBasis*, DomainKey>, Eigen::MatrixXd> cache;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    if (!c.basis) throw std::invalid_argument("build_design: curve without basis");
    if (!c.coeffs.allFinite()) {
      throw std::invalid_argument("build_design: subject '" + c.subject_id + "' has non-finite coefficients");
    }
    const auto key = std::make_pair(c.basis.get(), DomainKey{c.subject_domain.lo, c.subject_domain.hi});
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(key, cross_gram(*c.basis, basis_b, c.subject_domain).values).first;
    }
    xss.row(static_cast<Eigen::Index>(i)) = c.coeffs.transpose() * it->second;
  }
  return xss;
}

void standardize(Eigen::Ref<Eigen::VectorXd> col, double& center, double& scale, const std::string& name) {
  const auto n = static_cast<double>(col.size());
  center = col.mean();
  if (col.size() < 2) throw std::invalid_argument("covariate '" + name + "': need at least two subjects");
  scale = std::sqrt((col.array() - center).square().sum() / (n - 1.0));
  if (!(scale > 0.0)) throw std::invalid_argument("covariate column '" + name + "' is constant");
  col = (col.array() - center) / scale;
}

std::vector<double> numeric_values(const ScalarTable& t, int c, const std::string& name) {
  std::vector<double> v;
  v.reserve(t.subject_ids.size());
  for (std::size_t i = 0; i < t.subject_ids.size(); ++i) {
    const double x = parse_double(t.columns[static_cast<std::size_t>(c)][i], name);
    if (!std::isfinite(x)) {
      throw std::invalid_argument("covariate '" + name + "' is non-finite for subject '" + t.subject_ids[i] + "'");
    }
    v.push_back(x);
  }
  return v;
}

void append_column(RegressionDesign& d, std::vector<Eigen::VectorXd>& cols, Eigen::VectorXd col,
                   std::string name, bool standardized) {
  double center = 0.0;
  double scale = 1.0;
  if (standardized) standardize(col, center, scale, name);
  cols.push_back(std::move(col));
  d.z_names.push_back(std::move(name));
  d.penalized.push_back(true);
  d.z_center.conservativeResize(d.z_center.size() + 1);
  d.z_scale.conservativeResize(d.z_scale.size() + 1);
  d.z_center(d.z_center.size() - 1) = center;
  d.z_scale(d.z_scale.size() - 1) = scale;
}

void finish_z(RegressionDesign& d, std::vector<Eigen::VectorXd>& cols, Eigen::Index n) {
  append_column(d, cols, Eigen::VectorXd::Ones(n), "(intercept)", false);
  d.penalized.back() = false;
  d.z.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) d.z.col(static_cast<Eigen::Index>(c)) = cols[c];
}

std::string fmt_knot(double k) {
  std::ostringstream os;
  os << k;
  return os.str();
}

}  // namespace

std::vector<double> hinge_features(double value, const std::vector<double>& knots) {
  std::vector<double> f{value};
  for (double k : knots) f.push_back(std::max(value - k, 0.0));
  return f;
}

RegressionDesign build_design(const std::vector<CoefCurve>& curves, const BSplineBasis& basis_b,
                              const std::vector<double>& responses) {
  if (curves.empty()) throw std::invalid_argument("build_design: no subjects");
  if (responses.size() != curves.size()) {
    throw std::invalid_argument("build_design: " + std::to_string(responses.size()) + " responses for " +
                                std::to_string(curves.size()) + " curves");
  }
  const auto n = static_cast<Eigen::Index>(curves.size());
  RegressionDesign d;
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = responses[static_cast<std::size_t>(i)];
    if (!std::isfinite(y)) throw std::invalid_argument("build_design: non-finite response");
    d.y(i) = y;
    d.subject_ids.push_back(curves[static_cast<std::size_t>(i)].subject_id);
    d.subject_domains.push_back(curves[static_cast<std::size_t>(i)].subject_domain);
  }
  d.x_star_star = functional_rows(curves, basis_b);
  std::vector<Eigen::VectorXd> cols;
  finish_z(d, cols, n);
  return d;
}

RegressionDesign build_design(const std::vector<CoefCurve>& curves, const BSplineBasis& basis_b,
                              const ScalarTable& scalars, const ScalarDesignSpec& spec) {
  if (curves.empty()) throw std::invalid_argument("build_design: no subjects");
  const auto n = static_cast<Eigen::Index>(curves.size());
  if (scalars.subject_ids.size() != curves.size()) {
    throw std::invalid_argument("build_design: mismatched subjects (" + std::to_string(scalars.subject_ids.size()) +
                                " scalar rows, " + std::to_string(curves.size()) + " curves)");
  }
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < scalars.subject_ids.size(); ++i) {
    if (!row_of.emplace(scalars.subject_ids[i], i).second) {
      throw std::invalid_argument("build_design: duplicate subject '" + scalars.subject_ids[i] + "'");
    }
  }
  // Reorder scalars to curve order.
  ScalarTable t;
  t.names = scalars.names;
  t.columns.assign(scalars.columns.size(), {});
  for (const auto& c : curves) {
    auto it = row_of.find(c.subject_id);
    if (it == row_of.end()) {
      throw std::invalid_argument("build_design: subject '" + c.subject_id + "' has no scalar row");
    }
    t.subject_ids.push_back(c.subject_id);
    t.response.push_back(scalars.response[it->second]);
    for (std::size_t k = 0; k < scalars.columns.size(); ++k) t.columns[k].push_back(scalars.columns[k][it->second]);
  }

  RegressionDesign d = build_design(curves, basis_b, t.response);
  std::vector<Eigen::VectorXd> cols;
  d.z_names.clear();
  d.penalized.clear();
  d.z_center.resize(0);
  d.z_scale.resize(0);

  for (const auto& rule : spec.rules) {
    const int c = t.column(rule.name);
    if (c < 0) throw std::invalid_argument("build_design: no scalar column '" + rule.name + "'");
    switch (rule.kind) {
      case CovariateRule::Kind::Linear: {
        const auto v = numeric_values(t, c, rule.name);
        append_column(d, cols, Eigen::Map<const Eigen::VectorXd>(v.data(), n), rule.name, true);
        break;
      }
      case CovariateRule::Kind::Categorical: {
        const auto& raw = t.columns[static_cast<std::size_t>(c)];
        const std::set<std::string> levels(raw.begin(), raw.end());
        if (levels.size() < 2) throw std::invalid_argument("categorical covariate '" + rule.name + "' has one level");
        auto lv = levels.begin();
        for (++lv; lv != levels.end(); ++lv) {
          Eigen::VectorXd col(n);
          for (Eigen::Index i = 0; i < n; ++i) col(i) = raw[static_cast<std::size_t>(i)] == *lv ? 1.0 : 0.0;
          append_column(d, cols, std::move(col), rule.name + "=" + *lv, false);
        }
        break;
      }
      case CovariateRule::Kind::PiecewiseLinear: {
        const auto v = numeric_values(t, c, rule.name);
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        for (std::size_t k = 0; k < rule.knots.size(); ++k) {
          if (k > 0 && !(rule.knots[k] > rule.knots[k - 1])) {
            throw std::invalid_argument("covariate '" + rule.name + "': knots must be strictly increasing");
          }
          if (!(rule.knots[k] > *mn && rule.knots[k] < *mx)) {
            throw std::invalid_argument("covariate '" + rule.name + "': knot " + fmt_knot(rule.knots[k]) +
                                        " is not interior to the observed range");
          }
        }
        const auto width = rule.knots.size() + 1;
        std::vector<Eigen::VectorXd> feats(width, Eigen::VectorXd(n));
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto f = hinge_features(v[static_cast<std::size_t>(i)], rule.knots);
          for (std::size_t k = 0; k < width; ++k) feats[k](i) = f[k];
        }
        append_column(d, cols, feats[0], rule.name, true);
        for (std::size_t k = 0; k < rule.knots.size(); ++k) {
          append_column(d, cols, feats[k + 1], rule.name + "_hinge" + fmt_knot(rule.knots[k]), true);
        }
        break;
      }
      case CovariateRule::Kind::AdaptiveSpline: {
        const auto v = numeric_values(t, c, rule.name);
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        const Domain dom = rule.spline_domain.value_or(Domain{*mn, *mx});
        if (!dom.contains(*mn) || !dom.contains(*mx)) {
          throw std::invalid_argument("covariate '" + rule.name + "': values outside the spline domain");
        }
        SplineBlock block;
        block.name = rule.name;
        block.basis = std::make_shared<const BSplineBasis>(dom, rule.spline_size, 3);
        block.values = block.basis->eval_matrix(v);
        block.column_means = block.values.colwise().mean();
        block.values.rowwise() -= block.column_means;
        d.splines.push_back(std::move(block));
        break;
      }
    }
  }
  finish_z(d, cols, n);
  return d;
}

double cumulative_effect(const CoefCurve& curve, const Eigen::VectorXd& beta_coeffs,
                         const BSplineBasis& beta_basis) {
  if (!curve.basis) throw std::invalid_argument("cumulative_effect: curve without basis");
  if (beta_coeffs.size() != beta_basis.size()) {
    throw std::invalid_argument("cumulative_effect: coefficient length does not match the basis");
  }
  const double tol = 1e-12 * beta_basis.domain().length();
  if (!beta_basis.domain().contains(curve.subject_domain, tol)) {
    throw std::invalid_argument("cumulative_effect: subject domain outside the coefficient basis domain");
  }
  const auto j = cross_gram(*curve.basis, beta_basis, curve.subject_domain);
  return curve.coeffs.dot(j.values * beta_coeffs);
}

int ScalarTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<CurveObservation> read_curves(const std::filesystem::path& path, const Domain& reference) {
  const Table tab = read_table(path);
  const int cs = tab.require_column("subject_id");
  const int ct = tab.require_column("t");
  const int cx = tab.require_column("x");
  std::vector<CurveObservation> curves;
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    const auto& id = row[static_cast<std::size_t>(cs)];
    auto [it, fresh] = idx.emplace(id, curves.size());
    if (fresh) {
      curves.emplace_back();
      curves.back().subject_id = id;
    }
    auto& c = curves[it->second];
    const std::string ctx = path.filename().string() + " row " + std::to_string(r + 1);
    c.t.push_back(parse_double(row[static_cast<std::size_t>(ct)], ctx));
    c.x.push_back(parse_double(row[static_cast<std::size_t>(cx)], ctx));
  }
  for (auto& c : curves) {
    std::vector<std::size_t> order(c.t.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return c.t[a] < c.t[b]; });
    std::vector<double> t;
    std::vector<double> x;
    for (auto o : order) {
      t.push_back(c.t[o]);
      x.push_back(c.x[o]);
    }
    c.t = std::move(t);
    c.x = std::move(x);
    if (c.t.front() < reference.lo - 1e-12 * reference.length() ||
        c.t.back() > reference.hi + 1e-12 * reference.length()) {
      throw IoError("subject '" + c.subject_id + "' has observations outside the reference domain");
    }
    c.subject_domain = Domain{reference.lo, std::min(c.t.back(), reference.hi)};
    if (!c.subject_domain.valid()) throw IoError("subject '" + c.subject_id + "' has a degenerate domain");
  }
  return curves;
}

void write_curves(const std::filesystem::path& path, const std::vector<CurveObservation>& curves,
                  const std::vector<std::string>& comments) {
  TableWriter w(path, {"subject_id", "t", "x"}, comments);
  for (const auto& c : curves) {
    for (std::size_t j = 0; j < c.t.size(); ++j) {
      w.row({c.subject_id, format_double(c.t[j]), format_double(c.x[j])});
    }
  }
  w.close();
}

ScalarTable read_scalars(const std::filesystem::path& path) {
  const Table tab = read_table(path);
  const int cs = tab.require_column("subject_id");
  const int cr = tab.require_column("response");
  ScalarTable out;
  for (std::size_t c = 0; c < tab.header.size(); ++c) {
    if (static_cast<int>(c) == cs || static_cast<int>(c) == cr) continue;
    out.names.push_back(tab.header[c]);
    out.columns.emplace_back();
  }
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    out.subject_ids.push_back(row[static_cast<std::size_t>(cs)]);
    out.response.push_back(parse_double(row[static_cast<std::size_t>(cr)],
                                        path.filename().string() + " row " + std::to_string(r + 1)));
    std::size_t k = 0;
    for (std::size_t c = 0; c < tab.header.size(); ++c) {
      if (static_cast<int>(c) == cs || static_cast<int>(c) == cr) continue;
      out.columns[k++].push_back(row[c]);
    }
  }
  return out;
}

void write_scalars(const std::filesystem::path& path, const ScalarTable& table,
                   const std::vector<std::string>& comments) {
  std::vector<std::string> header{"subject_id", "response"};
  header.insert(header.end(), table.names.begin(), table.names.end());
  TableWriter w(path, header, comments);
  for (std::size_t i = 0; i < table.subject_ids.size(); ++i) {
    std::vector<std::string> row{table.subject_ids[i], format_double(table.response[i])};
    for (const auto& col : table.columns) row.push_back(col[i]);
    w.row(row);
  }
  w.close();
}

void write_design(const std::filesystem::path& path, const RegressionDesign& design,
                  const std::vector<std::string>& comments) {
  std::vector<std::string> header{"subject_id", "y"};
  for (const auto& name : design.z_names) header.push_back("z:" + name);
  for (Eigen::Index k = 0; k < design.kb(); ++k) header.push_back("xss" + std::to_string(k + 1));
  for (const auto& b : design.splines) {
    for (Eigen::Index k = 0; k < b.values.cols(); ++k) header.push_back(b.name + ":s" + std::to_string(k + 1));
  }
  TableWriter w(path, header, comments);
  for (Eigen::Index i = 0; i < design.n(); ++i) {
    std::vector<std::string> row{design.subject_ids[static_cast<std::size_t>(i)], format_double(design.y(i))};
    for (Eigen::Index c = 0; c < design.p(); ++c) row.push_back(format_double(design.z(i, c)));
    for (Eigen::Index k = 0; k < design.kb(); ++k) row.push_back(format_double(design.x_star_star(i, k)));
    for (const auto& b : design.splines) {
      for (Eigen::Index k = 0; k < b.values.cols(); ++k) row.push_back(format_double(b.values(i, k)));
    }
    w.row(row);
  }
  w.close();
}

CovariateRule parse_covariate_rule(const std::string& name, const std::string& text) {
  CovariateRule r;
  r.name = name;
  auto split_list = [&](const std::string& s, char delim) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, delim)) parts.push_back(item);
    return parts;
  };
  if (text == "linear") {
    r.kind = CovariateRule::Kind::Linear;
  } else if (text == "categorical") {
    r.kind = CovariateRule::Kind::Categorical;
  } else if (text.starts_with("pwl:")) {
    r.kind = CovariateRule::Kind::PiecewiseLinear;
    for (const auto& k : split_list(text.substr(4), ',')) r.knots.push_back(parse_double(k, "knot of " + name));
    if (r.knots.empty()) throw ConfigError("covariate '" + name + "': pwl needs at least one knot");
  } else if (text.starts_with("spline:")) {
    r.kind = CovariateRule::Kind::AdaptiveSpline;
    const auto parts = split_list(text.substr(7), ':');
    if (parts.size() != 1 && parts.size() != 3) {
      throw ConfigError("covariate '" + name + "': expected spline:K or spline:K:lo:hi");
    }
    r.spline_size = static_cast<int>(parse_double(parts[0], "spline size of " + name));
    if (r.spline_size < 4) throw ConfigError("covariate '" + name + "': spline size must be >= 4");
    if (parts.size() == 3) {
      r.spline_domain = Domain{parse_double(parts[1], name), parse_double(parts[2], name)};
    }
  } else {
    throw ConfigError("covariate '" + name + "': unknown expansion '" + text + "'");
  }
  return r;
}

}  // namespace basofr
