// pnpgmm: class-adapted plug-and-play restoration from the command line.
//
// Exit codes: 0 success, 2 argument error, 3 data error, 4 numerical divergence.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pnpgmm/admm.hpp"
#include "pnpgmm/bundle.hpp"
#include "pnpgmm/em.hpp"
#include "pnpgmm/errors.hpp"
#include "pnpgmm/gmm_io.hpp"
#include "pnpgmm/harness.hpp"
#include "pnpgmm/image_io.hpp"
#include "pnpgmm/metrics.hpp"

namespace fs = std::filesystem;
using namespace pnpgmm;

namespace {

constexpr int kExitArgument = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct TrainArgs {
  std::vector<std::string> images;
  int components = 20;
  int patch_size = 8;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
  int max_iters = 100;
  double tol = 1e-6;
  long max_patches = 0;
  std::string output;
  bool text = false;
};

struct RunArgs {
  std::string input;
  std::string library;
  std::string kernel;
  double sigma = -1.0;
  std::string mode = "none";
  double beta = 2.0;
  double mu = 0.05;
  int patch_size = 0;  // 0: take it from the library
  int max_iters = 200;
  double rel_tol = 1e-4;
  int switch_iter = 100;
  int switch_k = 20;
  long switch_patches = 20000;
  int switch_em_iters = 100;
  int self_train = 0;
  long self_max_patches = 20000;
  std::uint64_t seed = 0;
  std::string output;
  std::string labels;
  std::string diag;
};

struct EvalArgs {
  std::string reference;
  std::string observed;
  std::string restored;
  std::string run_dir;
  std::string kernel;
  double noise_variance = -1.0;
};

fs::path legend_path(const fs::path& labels_pgm) {
  fs::path p = labels_pgm;
  return p.replace_extension(".txt");
}

RestorationConfig restoration_config(const RunArgs& a, const ClassLibrary& library) {
  RestorationConfig rc;
  rc.patch_size = a.patch_size > 0 ? a.patch_size : library.patch_size();
  rc.mu = a.mu;
  rc.max_iters = a.max_iters;
  rc.rel_tol = a.rel_tol;
  rc.classify_mode = parse_classify_mode(a.mode);
  rc.beta = a.beta;
  rc.switch_iteration = a.switch_iter > 0 ? std::optional<int>(a.switch_iter) : std::nullopt;
  rc.switch_components = a.switch_k;
  rc.switch_max_patches = a.switch_patches;
  rc.switch_em_iters = a.switch_em_iters;
  rc.seed = a.seed;
  rc.validate();
  return rc;
}

int cmd_train(const TrainArgs& a) {
  Eigen::MatrixXd samples;
  for (const auto& path : a.images) {
    const PatchMatrix p = extract_patches(read_pgm(path), a.patch_size);
    Eigen::MatrixXd merged(p.dim(), samples.cols() + p.count());
    if (samples.cols() > 0) merged.leftCols(samples.cols()) = samples;
    merged.rightCols(p.count()) = p.data;
    samples = std::move(merged);
  }
  if (a.max_patches > 0) samples = subsample_columns(samples, a.max_patches, a.seed);
  EmOptions opt;
  opt.components = a.components;
  opt.seed = a.seed;
  opt.max_iters = a.max_iters;
  opt.tol = a.tol;
  const EmResult fit = a.sigma ? em_fit_noisy(samples, a.patch_size, *a.sigma, opt)
                               : em_fit_clean(samples, a.patch_size, opt);
  save_model(a.output, fit.model, a.text ? ModelFormat::text : ModelFormat::binary);
  std::cout << "K " << fit.model.components() << "\np " << fit.model.patch_size() << "\nd "
            << fit.model.dim() << "\nsamples " << samples.cols() << "\niterations "
            << fit.iterations << "\nlog_likelihood " << fit.log_likelihood.back() << "\n";
  return 0;
}

ClassLibrary maybe_self_train(const RunArgs& a, const Image& y, ClassLibrary library) {
  if (a.self_train <= 0) return library;
  const PatchMatrix p = extract_patches(y, library.patch_size());
  EmOptions opt;
  opt.components = a.self_train;
  opt.seed = a.seed;
  const Eigen::MatrixXd samples = subsample_columns(p.data, a.self_max_patches, a.seed);
  return library.with_class("self", em_fit_noisy(samples, library.patch_size(), a.sigma, opt).model);
}

int cmd_denoise(const RunArgs& a) {
  if (!(a.sigma > 0.0)) throw ArgumentError("--sigma must be positive");
  const Image y = read_pgm(a.input);
  const ClassLibrary library = maybe_self_train(a, y, load_library(a.library));
  const RestorationConfig rc = restoration_config(a, library);
  const VUpdateResult out = denoise_image(y, a.sigma, library, rc);
  write_pgm(a.output, out.v);
  if (!a.labels.empty()) {
    write_label_map(a.labels, legend_path(a.labels), out.labels, class_names(library));
  }
  return 0;
}

int cmd_deblur(const RunArgs& a) {
  if (!(a.sigma >= 0.0)) throw ArgumentError("--sigma must be non-negative");
  const Image y = read_pgm(a.input);
  const ClassLibrary library = load_library(a.library);
  const RestorationConfig rc = restoration_config(a, library);
  const DegradationModel model = a.kernel.empty()
                                     ? DegradationModel::identity(a.sigma)
                                     : DegradationModel::convolution(read_kernel(a.kernel), a.sigma);
  const RestorationResult out = restore(y, model, library, rc);
  write_pgm(a.output, out.image);
  if (!a.labels.empty() && out.labels.size() > 0) {
    write_label_map(a.labels, legend_path(a.labels), out.labels, class_names(library));
  }
  if (!a.diag.empty()) out.diagnostics.write_csv(a.diag);
  return 0;
}

int cmd_segment(const RunArgs& a) {
  if (!(a.sigma >= 0.0)) throw ArgumentError("--sigma must be non-negative");
  const Image y = read_pgm(a.input);
  const ClassLibrary library = load_library(a.library);
  const PatchMatrix patches = extract_patches(y, library.patch_size());
  const LabelField labels =
      classify_patches(patches, library, a.sigma, parse_classify_mode(a.mode), a.beta);
  write_label_map(a.labels, legend_path(a.labels), labels, class_names(library));
  return 0;
}

int cmd_evaluate(const EvalArgs& a) {
  const Image reference = read_pgm(a.reference);
  std::string observed = a.observed, restored = a.restored;
  if (!a.run_dir.empty()) {
    if (observed.empty()) observed = (fs::path(a.run_dir) / "observed.pgm").string();
    if (restored.empty()) restored = (fs::path(a.run_dir) / "restored.pgm").string();
  }
  if (observed.empty() && restored.empty()) {
    throw ArgumentError("evaluate needs --observed, --restored or --run-dir");
  }
  std::optional<Image> obs, est;
  if (!observed.empty()) obs = read_pgm(observed);
  if (!restored.empty()) est = read_pgm(restored);
  if (obs) std::cout << "psnr_in " << format_db(psnr(*obs, reference)) << "\n";
  if (est) std::cout << "psnr_out " << format_db(psnr(*est, reference)) << "\n";
  if (obs && est) std::cout << "isnr " << format_db(isnr(*obs, *est, reference)) << "\n";
  if (a.noise_variance >= 0.0) {
    const Image blurred = a.kernel.empty() ? reference
                                           : DegradationModel::convolution(read_kernel(a.kernel), 0.0)
                                                 .apply(reference);
    std::cout << "bsnr " << format_db(bsnr(blurred, a.noise_variance)) << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& config_path) {
  const HarnessConfig cfg = read_harness_config(config_path);
  for (const auto& e : run_bench(cfg)) {
    std::cout << e.run_name << " psnr_in " << format_db(e.report.psnr_in) << " psnr_out "
              << format_db(e.report.psnr_out) << " isnr " << format_db(e.report.isnr) << " bsnr "
              << format_db(e.report.bsnr) << "\n";
  }
  return 0;
}

void add_run_flags(CLI::App* cmd, RunArgs& a, bool with_admm) {
  cmd->add_option("-i,--input", a.input, "Observed image (PGM)")->required();
  cmd->add_option("-l,--library", a.library, "Class library manifest")->required();
  cmd->add_option("--sigma", a.sigma, "Observation noise standard deviation")->required();
  cmd->add_option("--mode", a.mode, "Patch classification: none, ml or alpha")
      ->check(CLI::IsMember({"none", "ml", "alpha"}));
  cmd->add_option("--beta", a.beta, "Potts weight per disagreeing neighbour pair");
  cmd->add_option("--patch-size", a.patch_size, "Patch size (defaults to the library's)");
  cmd->add_option("--seed", a.seed, "Seed for every randomized step");
  if (with_admm) {
    cmd->add_option("-k,--kernel", a.kernel, "Blur kernel file (omit for identity)");
    cmd->add_option("--mu", a.mu, "ADMM penalty; denoiser runs at 1/sqrt(mu)");
    cmd->add_option("--max-iters", a.max_iters, "Maximum ADMM iterations");
    cmd->add_option("--rel-tol", a.rel_tol, "Stop when |x_k - x_{k-1}| / |x_{k-1}| < rel-tol");
    cmd->add_option("--switch-iter", a.switch_iter, "Retrain the generic model after this iteration (0: never)");
    cmd->add_option("--switch-k", a.switch_k, "Components of the retrained generic model");
    cmd->add_option("--switch-patches", a.switch_patches, "Patch budget for the retraining");
    cmd->add_option("--switch-em-iters", a.switch_em_iters, "EM iterations for the retraining");
    cmd->add_option("--diag", a.diag, "Per-iteration diagnostics CSV");
  }
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
  if (const char* threads = std::getenv("PNPGMM_NUM_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
  CLI::App app{"Class-adapted plug-and-play image restoration with GMM patch priors"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit a GMM patch prior to images of one class");
  train_cmd->add_option("images", train.images, "Training images (PGM)")->required();
  train_cmd->add_option("-K,--components", train.components, "Mixture components");
  train_cmd->add_option("-p,--patch-size", train.patch_size, "Patch size");
  train_cmd->add_option("--sigma", train.sigma, "Noise level of the training images (noisy EM)");
  train_cmd->add_option("--seed", train.seed, "Random seed");
  train_cmd->add_option("--max-iters", train.max_iters, "EM iterations");
  train_cmd->add_option("--tol", train.tol, "Relative log-likelihood tolerance");
  train_cmd->add_option("--max-patches", train.max_patches, "Random patch subset size (0: all)");
  train_cmd->add_option("-o,--output", train.output, "Model file")->required();
  train_cmd->add_flag("--text", train.text, "Write the plain-text debugging format");

  RunArgs denoise;
  auto* denoise_cmd = app.add_subcommand("denoise", "Single-pass multi-class GMM denoising");
  add_run_flags(denoise_cmd, denoise, false);
  denoise_cmd->add_option("--self-train", denoise.self_train,
                          "Add a class fitted to the noisy image with this many components");
  denoise_cmd->add_option("--self-patches", denoise.self_max_patches, "Patch budget for --self-train");
  denoise_cmd->add_option("-o,--output", denoise.output, "Denoised image")->required();
  denoise_cmd->add_option("--labels", denoise.labels, "Label map PGM (legend written next to it)");

  RunArgs deblur;
  auto* deblur_cmd = app.add_subcommand("deblur", "Plug-and-play ADMM restoration");
  add_run_flags(deblur_cmd, deblur, true);
  deblur_cmd->add_option("-o,--output", deblur.output, "Restored image")->required();
  deblur_cmd->add_option("--labels", deblur.labels, "Label map PGM (legend written next to it)");

  RunArgs segment;
  auto* segment_cmd = app.add_subcommand("segment", "Export the patch classification only");
  add_run_flags(segment_cmd, segment, false);
  segment_cmd->add_option("--labels", segment.labels, "Label map PGM")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR / ISNR / BSNR against a reference");
  eval_cmd->add_option("-r,--reference", eval.reference, "Clean reference image")->required();
  eval_cmd->add_option("--observed", eval.observed, "Degraded input image");
  eval_cmd->add_option("--restored", eval.restored, "Restored image");
  eval_cmd->add_option("--run-dir", eval.run_dir, "Bench run directory");
  eval_cmd->add_option("--noise-variance", eval.noise_variance, "Noise variance for BSNR");
  eval_cmd->add_option("-k,--kernel", eval.kernel, "Blur kernel for BSNR");

  std::string bench_config;
  auto* bench_cmd = app.add_subcommand("bench", "Run a bench configuration file");
  bench_cmd->add_option("config", bench_config, "key = value configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitArgument;
  }

  try {
    if (*train_cmd) return cmd_train(train);
    if (*denoise_cmd) return cmd_denoise(denoise);
    if (*deblur_cmd) return cmd_deblur(deblur);
    if (*segment_cmd) return cmd_segment(segment);
    if (*eval_cmd) return cmd_evaluate(eval);
    if (*bench_cmd) return cmd_bench(bench_config);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArgument;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
