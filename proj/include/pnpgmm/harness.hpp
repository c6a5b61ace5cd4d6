#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pnpgmm/admm.hpp"
#include "pnpgmm/experiments.hpp"
#include "pnpgmm/metrics.hpp"

namespace pnpgmm {

struct ExperimentOutcome {
  MetricReport report;
  Image observed;
  Image restored;
  LabelField labels;
  Diagnostics diagnostics;
};

/// degrade -> restore -> report. With `run_dir`, writes observed.pgm, restored.pgm,
/// labels.pgm, labels.txt, diag.csv and report.txt; files are staged in a
/// sibling directory and moved into place once complete.
ExperimentOutcome run_experiment(const Image& reference, const ExperimentSpec& spec,
                                 const ClassLibrary& library, const RestorationConfig& config,
                                 const std::optional<std::filesystem::path>& run_dir = std::nullopt);

/// Writes the artifacts of a finished run (used by run_experiment and the CLI).
void write_run_artifacts(const std::filesystem::path& run_dir, const ExperimentOutcome& outcome,
                         const ClassLibrary& library, const std::string& header);

/// Bench configuration, "key = value" lines:
///   reference = img.pgm          (required; relative to the config file)
///   library = library.txt        (required)
///   output = runs                (default "runs")
///   experiments = 1,3            (registry ids; optional)
///   denoise_sigmas = 30          (identity-kernel runs; optional)
///   modes = none,ml,alpha        (default "none")
///   seed, patch_size, mu, max_iters, rel_tol, beta, switch_iter, switch_k,
///   switch_patches, switch_em_iters
/// switch_iter = 0 disables the generic-model switch.
struct HarnessConfig {
  std::filesystem::path reference;
  std::filesystem::path library;
  std::filesystem::path output = "runs";
  std::vector<int> experiments;
  std::vector<double> denoise_sigmas;
  std::vector<ClassifyMode> modes{ClassifyMode::none};
  RestorationConfig restoration;
};

HarnessConfig read_harness_config(const std::filesystem::path& path);

struct BenchEntry {
  std::string run_name;
  MetricReport report;
};

/// Runs every (experiment, mode) pair into <output>/<exp>_<mode>/.
std::vector<BenchEntry> run_bench(const HarnessConfig& config);

}  // namespace pnpgmm
