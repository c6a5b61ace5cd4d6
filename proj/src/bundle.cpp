#include "pnpgmm/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pnpgmm/errors.hpp"
#include "pnpgmm/gmm_io.hpp"
#include "pnpgmm/image_io.hpp"

namespace pnpgmm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open library manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 'name = path'");
    }
    const std::string key = trim(line.substr(0, eq));
    std::istringstream rest(line.substr(eq + 1));
    std::string file, flag;
    rest >> file >> flag;
    if (key == "version") {
      if (file != std::to_string(kManifestVersion)) {
        throw DataError(path.string() + ": unsupported manifest version " + file);
      }
      continue;
    }
    if (key.empty() || file.empty() || (!flag.empty() && flag != "generic")) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed class line");
    }
    entries.push_back({key, path.parent_path() / file, flag == "generic"});
  }
  return entries;
}

ClassLibrary load_library(const std::filesystem::path& manifest) {
  const auto entries = read_manifest(manifest);
  if (entries.empty()) throw DataError(manifest.string() + ": no classes listed");
  std::vector<NamedModel> classes;
  std::size_t generic = entries.size();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].generic) {
      if (generic != entries.size()) throw ArgumentError(manifest.string() + ": more than one generic class");
      generic = i;
    }
    if (!std::filesystem::exists(entries[i].path)) {
      throw DataError(manifest.string() + ": model file " + entries[i].path.string() +
                      " does not exist");
    }
    classes.push_back({entries[i].name, load_model(entries[i].path)});
  }
  if (generic == entries.size()) throw ArgumentError(manifest.string() + ": no class marked generic");
  const int p = classes.front().model.patch_size();
  for (const auto& c : classes) {
    if (c.model.patch_size() != p) {
      throw ArgumentError(manifest.string() + ": mixed patch sizes (" + classes.front().name +
                          " has " + std::to_string(p) + ", " + c.name + " has " +
                          std::to_string(c.model.patch_size()) + ")");
    }
  }
  return ClassLibrary(std::move(classes), generic);
}

std::filesystem::path save_library(const std::filesystem::path& dir, const ClassLibrary& library) {
  std::filesystem::create_directories(dir);
  const auto manifest = dir / "library.txt";
  std::ofstream out(manifest);
  if (!out) throw DataError("cannot write " + manifest.string());
  out << "version = " << kManifestVersion << "\n";
  for (std::size_t c = 0; c < library.size(); ++c) {
    const std::string file = library[c].name + ".gmm";
    save_model(dir / file, library[c].model);
    out << library[c].name << " = " << file << (c == library.generic_index() ? " generic" : "")
        << "\n";
  }
  if (!out) throw DataError("failed writing " + manifest.string());
  return manifest;
}

void write_label_map(const std::filesystem::path& pgm_path,
                     const std::filesystem::path& legend_path, const LabelField& labels,
                     const std::vector<std::string>& names) {
  if (labels.grid_rows < 1 || labels.grid_cols < 1) throw ArgumentError("empty label field");
  const int count = std::max<int>(1, static_cast<int>(names.size()));
  Image img(labels.grid_rows, labels.grid_cols);
  for (Eigen::Index r = 0; r < labels.grid_rows; ++r) {
    for (Eigen::Index c = 0; c < labels.grid_cols; ++c) {
      const int l = labels(r, c);
      if (l < 0 || l >= count) throw ArgumentError("label out of range for legend");
      img(r, c) = count == 1 ? 0.0 : 255.0 * l / (count - 1);
    }
  }
  write_pgm(pgm_path, img);
  std::ofstream out(legend_path);
  if (!out) throw DataError("cannot write " + legend_path.string());
  for (std::size_t i = 0; i < names.size(); ++i) out << i << " " << names[i] << "\n";
}

std::vector<std::string> class_names(const ClassLibrary& library) {
  std::vector<std::string> names;
  for (const auto& c : library.classes()) names.push_back(c.name);
  return names;
}

}  // namespace pnpgmm
