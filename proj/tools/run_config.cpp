#include "run_config.hpp"

#include <algorithm>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "basofr/errors.hpp"
#include "basofr/table_io.hpp"

namespace basofr::cli {

namespace {

// [design] also takes covariate.<name> = <rule>.
const char* const kCovariatePrefix = "covariate.";

std::map<std::string, std::map<std::string, std::string>> schema() {
  return {
      {"run", {{"seed", "1"}, {"out_dir", "."}, {"threads", "1"}}},
      {"io", {{"curves", ""}, {"scalars", ""}, {"archive", ""}}},
      {"simulate",
       {{"n", "500"},
        {"snr", "5"},
        {"truth", "smooth"},
        {"levels", "1,0,-1"},
        {"breakpoints", "0.3333333333333333,0.6666666666666666"},
        {"seasonal", "true"},
        {"period", "1.2372881355932204"},
        {"sigma_x", "0.7"},
        {"length_scale", "0.01"},
        {"grid_step", "0.01"},
        {"replicate", "0"},
        {"replicates", "10"}}},
      {"fit",
       {{"prior", "dhs"},
        {"kb", "53"},
        {"burnin", "10000"},
        {"draws", "10000"},
        {"thin", "1"},
        {"sigma_shape", "0.01"},
        {"sigma_rate", "0.01"},
        {"alpha_shape", "0.01"},
        {"alpha_rate", "0.01"},
        {"lambda_shape", "0.01"},
        {"lambda_rate", "0.01"},
        {"intercept_variance", "inf"},
        {"dhs_a", "0.5"},
        {"dhs_b", "0.5"},
        {"phi_beta_a", "10"},
        {"phi_beta_b", "2"},
        {"lambda0_shape", "0.01"},
        {"lambda0_rate", "0.01"},
        {"methods", "dhs,pspline,local-pspline"}}},
      {"design", {{"kx", "53"}, {"domain_lo", "0"}, {"domain_hi", "1"}}},
      {"summarize",
       {{"epsilon", "0.10"},
        {"zero_tol", "0"},
        {"max_entries", "100"},
        {"grid_points", "101"},
        {"decision", "true"}}},
  };
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() : values_(schema()) {}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  auto sec = values_.find(section);
  if (sec == values_.end()) throw ConfigError("unknown config section [" + section + "]");
  if (section == "design" && key.starts_with(kCovariatePrefix) && key.size() > std::string(kCovariatePrefix).size()) {
    parse_covariate_rule(key.substr(std::string(kCovariatePrefix).size()), value);
    sec->second[key] = value;
    return;
  }
  auto it = sec->second.find(key);
  if (it == sec->second.end()) throw ConfigError("unknown config key '" + key + "' in [" + section + "]");
  it->second = value;
}

void RunConfig::load(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    if (!std::filesystem::exists(path)) throw IoError("cannot open config '" + path.string() + "'");
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) set(section, key, value.get_value<std::string>());
  }
}

const std::string& RunConfig::get(const std::string& section, const std::string& key) const {
  return values_.at(section).at(key);
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
  try {
    return parse_double(get(section, key), section + "." + key);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

int RunConfig::get_int(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(section + "." + key + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t RunConfig::get_u64(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(section + "." + key + ": expected a non-negative integer, got '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(section + "." + key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(get(section, key))) {
    try {
      out.push_back(parse_double(s, section + "." + key));
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

std::vector<std::string> RunConfig::get_strings(const std::string& section, const std::string& key) const {
  return split_list(get(section, key));
}

std::string RunConfig::resolved() const {
  std::ostringstream os;
  for (const auto& [section, body] : values_) {
    os << '[' << section << "]\n";
    for (const auto& [key, value] : body) os << key << " = " << value << '\n';
    os << '\n';
  }
  return os.str();
}

std::string RunConfig::hash() const {
  RunConfig copy = *this;
  copy.values_["run"].erase("out_dir");
  copy.values_["run"].erase("threads");
  copy.values_["simulate"].erase("replicates");  // extending a study keeps its hash
  return hex64(fnv1a64(copy.resolved()));
}

void RunConfig::validate() const {
  try {
    (void)get_u64("run", "seed");
    if (get_int("run", "threads") < 1) throw ConfigError("run.threads must be at least 1");
    (void)get_int("simulate", "replicate");
    (void)simulation();
    (void)fit();
    (void)methods();
    (void)covariates();
    (void)domain();
    (void)decision();
    (void)get_int("design", "kx");
    (void)get_int("summarize", "grid_points");
    (void)study();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void RunConfig::write_resolved(const std::filesystem::path& dir) const {
  std::ofstream out(dir / "resolved_config.ini");
  out << "# " << hash_comment() << '\n' << resolved();
  if (!out) throw IoError("cannot write resolved config in '" + dir.string() + "'");
}

std::filesystem::path RunConfig::out_dir() const { return get("run", "out_dir"); }

std::filesystem::path RunConfig::io_path(const std::string& key, const std::string& fallback) const {
  const std::string& v = get("io", key);
  return v.empty() ? out_dir() / fallback : std::filesystem::path(v);
}

SimulationDesign RunConfig::simulation() const {
  SimulationDesign d;
  d.n = get_int("simulate", "n");
  d.snr = get_double("simulate", "snr");
  d.replicates = get_int("simulate", "replicates");
  d.seed = get_u64("run", "seed");
  const double step = get_double("simulate", "grid_step");
  const Domain dom = domain();
  try {
    d.grid = regular_grid(dom.lo, dom.hi, step);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  d.gp.seasonal = get_bool("simulate", "seasonal");
  d.gp.period = get_double("simulate", "period");
  d.gp.sigma_x = get_double("simulate", "sigma_x");
  d.gp.length_scale = get_double("simulate", "length_scale");
  const std::string& truth = get("simulate", "truth");
  if (truth == "smooth") {
    d.truth.kind = Truth::Kind::Smooth;
  } else if (truth == "locally-constant") {
    d.truth.kind = Truth::Kind::LocallyConstant;
  } else {
    throw ConfigError("simulate.truth must be smooth or locally-constant, got '" + truth + "'");
  }
  d.truth.levels = get_doubles("simulate", "levels");
  d.truth.breakpoints = get_doubles("simulate", "breakpoints");
  d.validate();
  return d;
}

FitConfig RunConfig::fit() const {
  FitConfig c;
  c.prior = parse_prior_kind(get("fit", "prior"));
  c.seed = get_u64("run", "seed");
  c.mcmc.burnin = get_int("fit", "burnin");
  c.mcmc.draws = get_int("fit", "draws");
  c.mcmc.thin = get_int("fit", "thin");
  c.hyper.sigma_shape = get_double("fit", "sigma_shape");
  c.hyper.sigma_rate = get_double("fit", "sigma_rate");
  c.hyper.alpha_shape = get_double("fit", "alpha_shape");
  c.hyper.alpha_rate = get_double("fit", "alpha_rate");
  c.hyper.lambda_shape = get_double("fit", "lambda_shape");
  c.hyper.lambda_rate = get_double("fit", "lambda_rate");
  c.hyper.intercept_variance = get_double("fit", "intercept_variance");
  c.dhs.a = get_double("fit", "dhs_a");
  c.dhs.b = get_double("fit", "dhs_b");
  c.dhs.phi_beta_a = get_double("fit", "phi_beta_a");
  c.dhs.phi_beta_b = get_double("fit", "phi_beta_b");
  c.dhs.lambda0_shape = get_double("fit", "lambda0_shape");
  c.dhs.lambda0_rate = get_double("fit", "lambda0_rate");
  c.validate();
  if (get_int("fit", "kb") < 4) throw ConfigError("fit.kb must be at least 4");
  return c;
}

std::vector<PriorKind> RunConfig::methods() const {
  std::vector<PriorKind> out;
  for (const auto& m : get_strings("fit", "methods")) out.push_back(parse_prior_kind(m));
  if (out.empty()) throw ConfigError("fit.methods is empty");
  return out;
}

ScalarDesignSpec RunConfig::covariates() const {
  ScalarDesignSpec spec;
  const std::string prefix = kCovariatePrefix;
  for (const auto& [key, value] : values_.at("design")) {
    if (key.starts_with(prefix)) spec.rules.push_back(parse_covariate_rule(key.substr(prefix.size()), value));
  }
  return spec;
}

Domain RunConfig::domain() const {
  const Domain d{get_double("design", "domain_lo"), get_double("design", "domain_hi")};
  if (!(d.hi > d.lo)) throw ConfigError("design.domain_lo must be below design.domain_hi");
  return d;
}

DecisionOptions RunConfig::decision() const {
  DecisionOptions o;
  o.epsilon = get_double("summarize", "epsilon");
  o.zero_tol = get_double("summarize", "zero_tol");
  const int m = get_int("summarize", "max_entries");
  if (!(o.epsilon > 0.0 && o.epsilon < 1.0)) throw ConfigError("summarize.epsilon must lie in (0, 1)");
  if (!(o.zero_tol >= 0.0)) throw ConfigError("summarize.zero_tol must be non-negative");
  if (m < 2) throw ConfigError("summarize.max_entries must be at least 2");
  o.max_entries = static_cast<std::size_t>(m);
  o.seed = get_u64("run", "seed");
  return o;
}

StudyConfig RunConfig::study() const {
  StudyConfig s;
  s.design = simulation();
  s.methods = methods();
  s.kx = get_int("design", "kx");
  s.kb = get_int("fit", "kb");
  const FitConfig f = fit();
  s.mcmc = f.mcmc;
  s.hyper = f.hyper;
  s.dhs = f.dhs;
  s.decision = get_bool("summarize", "decision") &&
               std::find(s.methods.begin(), s.methods.end(), PriorKind::Dhs) != s.methods.end();
  s.decision_options = decision();
  s.threads = get_int("run", "threads");
  s.validate();
  return s;
}

}  // namespace basofr::cli
