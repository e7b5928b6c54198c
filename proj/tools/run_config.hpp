#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "basofr/decision.hpp"
#include "basofr/funcdata.hpp"
#include "basofr/gibbs.hpp"
#include "basofr/simulate.hpp"
#include "basofr/study.hpp"

namespace basofr::cli {

/// Sectioned key/value settings. Every key has a schema default; file
/// values and flag overrides are checked against the schema.
class RunConfig {
 public:
  RunConfig();

  /// Loads an INI file. Unknown sections or keys raise ConfigError naming them.
  void load(const std::filesystem::path& path);
  void set(const std::string& section, const std::string& key, const std::string& value);
  [[nodiscard]] const std::string& get(const std::string& section, const std::string& key) const;

  [[nodiscard]] double get_double(const std::string& section, const std::string& key) const;
  [[nodiscard]] int get_int(const std::string& section, const std::string& key) const;
  [[nodiscard]] std::uint64_t get_u64(const std::string& section, const std::string& key) const;
  [[nodiscard]] bool get_bool(const std::string& section, const std::string& key) const;
  [[nodiscard]] std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
  [[nodiscard]] std::vector<std::string> get_strings(const std::string& section, const std::string& key) const;

  /// Canonical INI text, sections and keys sorted.
  [[nodiscard]] std::string resolved() const;
  /// FNV-1a of resolved() without the [run] keys that cannot change results.
  [[nodiscard]] std::string hash() const;
  [[nodiscard]] std::string hash_comment() const { return "config_hash=" + hash(); }

  /// Parses every typed value so a bad key fails before any command runs.
  void validate() const;

  void write_resolved(const std::filesystem::path& dir) const;

  [[nodiscard]] std::filesystem::path out_dir() const;
  /// [io] path, or out_dir/fallback when empty.
  [[nodiscard]] std::filesystem::path io_path(const std::string& key, const std::string& fallback) const;

  [[nodiscard]] SimulationDesign simulation() const;
  [[nodiscard]] FitConfig fit() const;
  [[nodiscard]] std::vector<PriorKind> methods() const;
  [[nodiscard]] ScalarDesignSpec covariates() const;
  [[nodiscard]] Domain domain() const;
  [[nodiscard]] DecisionOptions decision() const;
  [[nodiscard]] StudyConfig study() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace basofr::cli
