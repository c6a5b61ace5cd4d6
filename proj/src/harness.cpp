#include "pnpgmm/harness.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "pnpgmm/bundle.hpp"
#include "pnpgmm/errors.hpp"
#include "pnpgmm/image_io.hpp"

namespace pnpgmm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ArgumentError("bench config: '" + key + "' expects a number, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != static_cast<int>(v)) throw ArgumentError("bench config: '" + key + "' expects an integer");
  return static_cast<int>(v);
}

}  // namespace

void write_run_artifacts(const std::filesystem::path& run_dir, const ExperimentOutcome& outcome,
                         const ClassLibrary& library, const std::string& header) {
  std::filesystem::create_directories(run_dir);
  write_pgm(run_dir / "observed.pgm", outcome.observed);
  write_pgm(run_dir / "restored.pgm", outcome.restored);
  if (outcome.labels.size() > 0) {
    write_label_map(run_dir / "labels.pgm", run_dir / "labels.txt", outcome.labels,
                    class_names(library));
  }
  outcome.diagnostics.write_csv(run_dir / "diag.csv");
  std::ofstream report(run_dir / "report.txt");
  if (!report) throw DataError("cannot write report in " + run_dir.string());
  report << header << outcome.report.to_text();
}

ExperimentOutcome run_experiment(const Image& reference, const ExperimentSpec& spec,
                                 const ClassLibrary& library, const RestorationConfig& config,
                                 const std::optional<std::filesystem::path>& run_dir) {
  ExperimentOutcome out{{}, degrade(reference, spec), reference, {}, {}};
  const double sigma = std::sqrt(spec.noise_variance);
  const DegradationModel model = DegradationModel::convolution(spec.kernel, sigma);
  RestorationResult restored = restore(out.observed, model, library, config);
  out.restored = std::move(restored.image);
  out.labels = std::move(restored.labels);
  out.diagnostics = std::move(restored.diagnostics);
  out.report.psnr_in = psnr(out.observed, reference);
  out.report.psnr_out = psnr(out.restored, reference);
  out.report.isnr = isnr(out.observed, out.restored, reference);
  out.report.bsnr = bsnr(model.apply(reference), spec.noise_variance);

  if (run_dir) {
    std::filesystem::path staging = *run_dir;
    staging += ".partial";
    std::filesystem::remove_all(staging);
    std::ostringstream header;
    header << "experiment " << spec.name << "\nmode " << to_string(config.classify_mode)
           << "\nnoise_variance " << spec.noise_variance << "\nseed " << spec.seed << "\n";
    write_run_artifacts(staging, out, library, header.str());
    std::filesystem::remove_all(*run_dir);
    std::filesystem::rename(staging, *run_dir);
  }
  return out;
}

HarnessConfig read_harness_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open bench config " + path.string());
  HarnessConfig cfg;
  const auto base = path.parent_path();
  RestorationConfig& rc = cfg.restoration;
  std::string line;
  bool have_reference = false, have_library = false;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ArgumentError("bench config: expected 'key = value': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "reference") {
      cfg.reference = base / value;
      have_reference = true;
    } else if (key == "library") {
      cfg.library = base / value;
      have_library = true;
    } else if (key == "output") {
      cfg.output = base / value;
    } else if (key == "experiments") {
      for (const auto& v : split_list(value)) cfg.experiments.push_back(to_int(key, v));
    } else if (key == "denoise_sigmas") {
      for (const auto& v : split_list(value)) cfg.denoise_sigmas.push_back(to_double(key, v));
    } else if (key == "modes") {
      cfg.modes.clear();
      for (const auto& v : split_list(value)) cfg.modes.push_back(parse_classify_mode(v));
    } else if (key == "seed") {
      rc.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "patch_size") {
      rc.patch_size = to_int(key, value);
    } else if (key == "mu") {
      rc.mu = to_double(key, value);
    } else if (key == "max_iters") {
      rc.max_iters = to_int(key, value);
    } else if (key == "rel_tol") {
      rc.rel_tol = to_double(key, value);
    } else if (key == "beta") {
      rc.beta = to_double(key, value);
    } else if (key == "switch_iter") {
      const int t = to_int(key, value);
      rc.switch_iteration = t > 0 ? std::optional<int>(t) : std::nullopt;
    } else if (key == "switch_k") {
      rc.switch_components = to_int(key, value);
    } else if (key == "switch_patches") {
      rc.switch_max_patches = to_int(key, value);
    } else if (key == "switch_em_iters") {
      rc.switch_em_iters = to_int(key, value);
    } else {
      throw ArgumentError("bench config: unknown key '" + key + "'");
    }
  }
  if (!have_reference || !have_library) {
    throw ArgumentError("bench config needs 'reference' and 'library'");
  }
  if (cfg.experiments.empty() && cfg.denoise_sigmas.empty()) {
    throw ArgumentError("bench config lists no experiments");
  }
  if (rc.switch_iteration && *rc.switch_iteration > rc.max_iters) rc.switch_iteration.reset();
  rc.validate();
  return cfg;
}

std::vector<BenchEntry> run_bench(const HarnessConfig& config) {
  const Image reference = read_pgm(config.reference);
  const ClassLibrary library = load_library(config.library);
  std::vector<ExperimentSpec> specs;
  for (int id : config.experiments) {
    specs.push_back(registry_experiment(id, reference, config.restoration.seed));
  }
  for (double s : config.denoise_sigmas) {
    specs.push_back(denoising_experiment(s, config.restoration.seed));
  }
  std::vector<BenchEntry> entries;
  for (const auto& spec : specs) {
    for (ClassifyMode mode : config.modes) {
      RestorationConfig rc = config.restoration;
      rc.classify_mode = mode;
      const std::string name = spec.name + "_" + to_string(mode);
      const auto outcome = run_experiment(reference, spec, library, rc, config.output / name);
      entries.push_back({name, outcome.report});
    }
  }
  return entries;
}

}  // namespace pnpgmm
