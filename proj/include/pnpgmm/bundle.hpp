#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pnpgmm/classifier.hpp"

namespace pnpgmm {

/// Library manifest: plain text, one "name = path [generic]" line per class,
/// optional "version = 1" line, '#' comments. Paths are relative to the
/// manifest's directory. Exactly one class must be marked generic.
struct ManifestEntry {
  std::string name;
  std::filesystem::path path;
  bool generic = false;
};

inline constexpr int kManifestVersion = 1;

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Loads every referenced GMMPRIOR v1 model. Throws DataError for unresolved
/// files and ArgumentError for mixed patch sizes or a missing generic class.
ClassLibrary load_library(const std::filesystem::path& manifest);

/// Writes <dir>/<name>.gmm for every class plus <dir>/library.txt; returns the
/// manifest path.
std::filesystem::path save_library(const std::filesystem::path& dir, const ClassLibrary& library);

/// Label map as an 8-bit PGM (class index scaled to 0..255) plus a sidecar
/// legend with one "index name" line per class.
void write_label_map(const std::filesystem::path& pgm_path,
                     const std::filesystem::path& legend_path, const LabelField& labels,
                     const std::vector<std::string>& class_names);

std::vector<std::string> class_names(const ClassLibrary& library);

}  // namespace pnpgmm
