#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "basofr/gibbs.hpp"

namespace basofr {

/// Run metadata stored in the archive manifest.
struct ArchiveMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  PriorKind prior = PriorKind::Dhs;
  std::map<std::string, std::string> extra;  // free-form key/value pairs (no spaces in keys)
};

struct DrawArchive {
  ArchiveMeta meta;
  PosteriorDraws draws;
};

/// Writes `dir/manifest.txt` plus one little-endian float64 file per block
/// (draw-major). The archive is assembled in a sibling temporary directory
/// and renamed into place, so a failed write leaves no partial archive.
void write_archive(const std::filesystem::path& dir, const PosteriorDraws& draws, const ArchiveMeta& meta);

DrawArchive read_archive(const std::filesystem::path& dir);

}  // namespace basofr
