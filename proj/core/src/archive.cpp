#include "basofr/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "basofr/errors.hpp"

namespace basofr {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "basofr-draws 1";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
}

void write_matrix(const fs::path& file, const Eigen::MatrixXd& m) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  std::vector<std::uint64_t> buf(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::uint64_t bits = 0;
      const double v = m(r, c);
      std::memcpy(&bits, &v, sizeof bits);
      buf[static_cast<std::size_t>(c)] = to_le(bits);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + file.string() + "'");
}

Eigen::MatrixXd read_matrix(const fs::path& file, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  std::error_code ec;
  const auto bytes = fs::file_size(file, ec);
  if (ec || bytes != static_cast<std::uintmax_t>(rows * cols * 8)) {
    throw IoError("'" + file.string() + "' has the wrong size for " + std::to_string(rows) + " x " +
                  std::to_string(cols) + " values");
  }
  Eigen::MatrixXd m(rows, cols);
  std::vector<std::uint64_t> buf(static_cast<std::size_t>(cols));
  for (Eigen::Index r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    if (!in) throw IoError("short read in '" + file.string() + "'");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const std::uint64_t bits = to_le(buf[static_cast<std::size_t>(c)]);
      double v = 0.0;
      std::memcpy(&v, &bits, sizeof v);
      m(r, c) = v;
    }
  }
  return m;
}

std::vector<std::pair<std::string, Eigen::MatrixXd>> blocks_of(const PosteriorDraws& d) {
  std::vector<std::pair<std::string, Eigen::MatrixXd>> b;
  b.emplace_back("b_star", d.b_star);
  b.emplace_back("alpha", d.alpha);
  b.emplace_back("sigma2", d.sigma2);
  b.emplace_back("sigma_j2", d.sigma_j2);
  for (std::size_t j = 0; j < d.spline_coefs.size(); ++j) b.emplace_back("spline" + std::to_string(j), d.spline_coefs[j]);
  b.emplace_back("lambda2", d.lambda2);
  b.emplace_back("lambda0", d.lambda0);
  if (d.h.size() > 0) {
    b.emplace_back("h", d.h);
    b.emplace_back("mu_h", d.mu_h);
    b.emplace_back("phi", d.phi);
  }
  return b;
}

}  // namespace

void write_archive(const fs::path& dir, const PosteriorDraws& draws, const ArchiveMeta& meta) {
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::current_path();
  std::error_code ec;
  fs::create_directories(parent, ec);
  std::random_device rd;
  const fs::path tmp = parent / (dir.filename().string() + ".tmp-" + std::to_string(rd()));
  try {
    fs::create_directories(tmp);
    std::ostringstream man;
    man << kFormat << '\n';
    man << "draws " << draws.size() << '\n';
    man << "seed " << meta.seed << '\n';
    man << "config_hash " << (meta.config_hash.empty() ? "-" : meta.config_hash) << '\n';
    man << "prior " << to_string(meta.prior) << '\n';
    for (const auto& [k, v] : meta.extra) man << "meta " << k << ' ' << v << '\n';
    for (const auto& [name, m] : blocks_of(draws)) {
      if (m.rows() != draws.size()) throw std::invalid_argument("write_archive: block '" + name + "' has the wrong draw count");
      write_matrix(tmp / (name + ".bin"), m);
      man << "block " << name << ' ' << m.cols() << '\n';
    }
    write_matrix(tmp / "fitted_mean.bin", draws.fitted_mean.transpose());
    man << "vector fitted_mean " << draws.fitted_mean.size() << '\n';
    {
      std::ofstream out(tmp / "manifest.txt");
      out << man.str();
      out.flush();
      if (!out) throw IoError("cannot write manifest in '" + tmp.string() + "'");
    }
    if (fs::exists(dir)) fs::remove_all(dir);
    fs::rename(tmp, dir);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(tmp, ec);
    throw IoError(std::string("archive: ") + e.what());
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
}

DrawArchive read_archive(const fs::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw IoError("no draw archive at '" + dir.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != kFormat) throw IoError("'" + dir.string() + "' is not a draw archive");
  DrawArchive a;
  Eigen::Index count = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "draws") {
      ss >> count;
    } else if (key == "seed") {
      ss >> a.meta.seed;
      a.draws.seed = a.meta.seed;
    } else if (key == "config_hash") {
      ss >> a.meta.config_hash;
      if (a.meta.config_hash == "-") a.meta.config_hash.clear();
    } else if (key == "prior") {
      std::string p;
      ss >> p;
      a.meta.prior = parse_prior_kind(p);
      a.draws.prior = a.meta.prior;
    } else if (key == "meta") {
      std::string k;
      ss >> k;
      std::string v;
      std::getline(ss >> std::ws, v);
      a.meta.extra[k] = v;
    } else if (key == "block" || key == "vector") {
      std::string name;
      Eigen::Index dim = 0;
      ss >> name >> dim;
      if (!ss || count < 0) throw IoError("malformed manifest line '" + line + "'");
      if (key == "vector") {
        const Eigen::MatrixXd m = read_matrix(dir / (name + ".bin"), 1, dim);
        if (name == "fitted_mean") a.draws.fitted_mean = m.row(0).transpose();
        continue;
      }
      Eigen::MatrixXd m = read_matrix(dir / (name + ".bin"), count, dim);
      auto& d = a.draws;
      if (name == "b_star") d.b_star = std::move(m);
      else if (name == "alpha") d.alpha = std::move(m);
      else if (name == "sigma2") d.sigma2 = m.col(0);
      else if (name == "sigma_j2") d.sigma_j2 = std::move(m);
      else if (name == "lambda2") d.lambda2 = std::move(m);
      else if (name == "lambda0") d.lambda0 = m.col(0);
      else if (name == "h") d.h = std::move(m);
      else if (name == "mu_h") d.mu_h = m.col(0);
      else if (name == "phi") d.phi = m.col(0);
      else if (name.starts_with("spline")) d.spline_coefs.push_back(std::move(m));
      else throw IoError("unknown block '" + name + "' in manifest");
    } else {
      throw IoError("unknown manifest key '" + key + "'");
    }
  }
  if (count < 0 || a.draws.sigma2.size() != count) throw IoError("incomplete manifest in '" + dir.string() + "'");
  return a;
}

}  // namespace basofr
