#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace basofr {

/// Delimited text table with a header row. Lines starting with '#' are
/// comments (config hash, provenance) and are kept separately.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] int column(std::string_view name) const;  // -1 if missing
  [[nodiscard]] int require_column(std::string_view name) const;
  [[nodiscard]] std::vector<double> numeric_column(std::string_view name) const;
};

Table read_table(const std::filesystem::path& path, char delimiter = ',');

double parse_double(std::string_view text, std::string_view context);

/// Round-trip precision formatting.
std::string format_double(double value);

class TableWriter {
 public:
  TableWriter(const std::filesystem::path& path, std::vector<std::string> header,
              const std::vector<std::string>& comments = {}, char delimiter = ',');

  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  std::size_t width_;
  char delim_;
};

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

}  // namespace basofr
