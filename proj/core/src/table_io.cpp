#include "basofr/table_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "basofr/errors.hpp"

namespace basofr {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

}  // namespace

int Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int Table::require_column(std::string_view name) const {
  const int c = column(name);
  if (c < 0) throw IoError("table is missing column '" + std::string(name) + "'");
  return c;
}

std::vector<double> Table::numeric_column(std::string_view name) const {
  const int c = require_column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.push_back(parse_double(rows[r][static_cast<std::size_t>(c)],
                               std::string(name) + " row " + std::to_string(r + 1)));
  }
  return out;
}

Table read_table(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line);
      continue;
    }
    auto cells = split(line, delimiter);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(t.header.size()) + " fields, found " +
                    std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw IoError("'" + path.string() + "' has no header row");
  return t;
}

double parse_double(std::string_view text, std::string_view context) {
  if (text == "inf" || text == "Inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf" || text == "-Inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan" || text == "NaN" || text == "NA") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw IoError("cannot parse number '" + std::string(text) + "' (" + std::string(context) + ")");
  }
  return v;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

TableWriter::TableWriter(const std::filesystem::path& path, std::vector<std::string> header,
                         const std::vector<std::string>& comments, char delimiter)
    : out_(path), width_(header.size()), delim_(delimiter) {
  if (!out_) throw IoError("cannot write '" + path.string() + "'");
  for (const auto& c : comments) out_ << (c.starts_with("#") ? "" : "# ") << c << '\n';
  row(header);
}

void TableWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::invalid_argument("TableWriter: row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << delim_;
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw IoError("write failed");
}

void TableWriter::close() {
  out_.flush();
  if (!out_) throw IoError("write failed");
  out_.close();
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace basofr
