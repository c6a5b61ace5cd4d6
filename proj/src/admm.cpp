#include "pnpgmm/admm.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include "pnpgmm/em.hpp"
#include "pnpgmm/errors.hpp"
#include "pnpgmm/patches.hpp"

namespace pnpgmm {
namespace {

BlurKernel flipped(const BlurKernel& kernel) {
  return BlurKernel(kernel.taps().reverse().eval());
}

double norm(const Image& a) { return a.pixels().norm(); }

}  // namespace

DegradationModel DegradationModel::identity(double sigma) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise standard deviation must be non-negative");
  return DegradationModel{std::nullopt, sigma};
}

DegradationModel DegradationModel::convolution(BlurKernel kernel, double sigma) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise standard deviation must be non-negative");
  return DegradationModel{std::move(kernel), sigma};
}

Image DegradationModel::apply(const Image& x) const {
  return kernel ? convolve_periodic_fft(x, *kernel) : x;
}

Image DegradationModel::apply_adjoint(const Image& x) const {
  return kernel ? convolve_periodic_fft(x, flipped(*kernel)) : x;
}

void RestorationConfig::validate() const {
  if (patch_size < 2) throw ArgumentError("patch size must be at least 2");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ArgumentError("mu must be positive and finite");
  if (max_iters < 1) throw ArgumentError("max_iters must be at least 1");
  if (!(rel_tol >= 0.0)) throw ArgumentError("rel_tol must be non-negative");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ArgumentError("beta must be non-negative");
  if (switch_iteration && *switch_iteration < 1) {
    throw ArgumentError("switch iteration must be positive");
  }
  if (switch_components < 1) throw ArgumentError("switch K must be positive");
  if (switch_max_patches < 1) throw ArgumentError("switch patch budget must be positive");
  if (expansion_cycles < 1) throw ArgumentError("expansion cycles must be positive");
}

double RestorationConfig::sigma_eff() const { return 1.0 / std::sqrt(mu); }

DataTermSolver::DataTermSolver(const Image& y, const DegradationModel& model, double mu)
    : height_(y.height()), width_(y.width()), penalty_(mu * model.sigma * model.sigma) {
  if (!(mu > 0.0)) throw ArgumentError("mu must be positive");
  if (model.is_identity()) {
    y_ = y;
    return;
  }
  const ComplexMatrix h = transfer_function(*model.kernel, height_, width_);
  numerator_ = h.conjugate().cwiseProduct(fft2(y.pixels()));
  denominator_ = h.cwiseAbs2().array() + penalty_;
  const double peak = denominator_.maxCoeff();
  if (!(denominator_.minCoeff() > 1e-12 * peak)) {
    throw ArgumentError(
        "x-update is ill-conditioned: blur operator is singular and mu * sigma^2 = 0");
  }
}

Image DataTermSolver::solve(const Image& target) const {
  if (target.height() != height_ || target.width() != width_) {
    throw ArgumentError("x-update target has the wrong shape");
  }
  if (y_) {
    return Image((y_->pixels() + penalty_ * target.pixels()) / (1.0 + penalty_));
  }
  ComplexMatrix rhs = numerator_ + penalty_ * fft2(target.pixels());
  rhs.array() /= denominator_.array().cast<std::complex<double>>();
  return Image(ifft2(rhs).real());
}

Image x_update(const AdmmState& state, const Image& y, const DegradationModel& model) {
  if (!state.v.same_shape(y) || !state.d.same_shape(y)) {
    throw ArgumentError("ADMM state and observation differ in shape");
  }
  DataTermSolver solver(y, model, state.mu);
  return solver.solve(Image(state.v.pixels() + state.d.pixels()));
}

VUpdateResult denoise_image(const Image& z, double sigma, const ClassLibrary& library,
                            const RestorationConfig& config,
                            const std::optional<LabelField>& previous) {
  if (library.patch_size() != config.patch_size) {
    throw ArgumentError("library patch size " + std::to_string(library.patch_size()) +
                        " does not match configured patch size " +
                        std::to_string(config.patch_size));
  }
  const PatchMatrix patches = extract_patches(z, config.patch_size);
  LabelField labels =
      classify_patches(patches, library, sigma, config.classify_mode, config.beta, previous,
                       config.expansion_cycles);

  PatchMatrix estimates = patches;
  Eigen::VectorXd weights(patches.count());
  for (std::size_t c = 0; c < library.size(); ++c) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index j = 0; j < patches.count(); ++j) {
      if (labels.labels[static_cast<std::size_t>(j)] == static_cast<int>(c)) members.push_back(j);
    }
    if (members.empty()) continue;
    const Eigen::MatrixXd subset = patches.data(Eigen::all, members);
    const DenoisedPatchSet out = denoise_columns(library[c].model, subset, sigma);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      estimates.data.col(members[i]) = out.estimates.col(col);
      weights[members[i]] = 1.0 / out.posterior_variances[col];
    }
  }
  return {aggregate_patches(estimates, weights), std::move(labels)};
}

VUpdateResult v_update(const AdmmState& state, const ClassLibrary& library,
                       const RestorationConfig& config,
                       const std::optional<LabelField>& previous) {
  const Image z(state.x.pixels() - state.d.pixels());
  return denoise_image(z, 1.0 / std::sqrt(state.mu), library, config, previous);
}

Image dual_update(const AdmmState& state) {
  return Image(state.d.pixels() - (state.x.pixels() - state.v.pixels()));
}

ClassLibrary gmm_switch(const AdmmState& state, const ClassLibrary& library,
                        const RestorationConfig& config) {
  const PatchMatrix patches = extract_patches(state.x, config.patch_size);
  const Eigen::MatrixXd samples =
      subsample_columns(patches.data, config.switch_max_patches, config.seed);
  EmOptions options;
  options.components = config.switch_components;
  options.seed = config.seed;
  options.max_iters = config.switch_em_iters;
  return library.with_generic(em_fit_clean(samples, config.patch_size, options).model);
}

void Diagnostics::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(10);
  out << "k,primal_residual,relative_change,sigma_eff,labels_changed,wall_ms\n";
  for (const auto& it : iterations) {
    out << it.k << "," << it.primal_residual << "," << it.relative_change << "," << it.sigma_eff
        << "," << it.labels_changed << "," << it.wall_ms << "\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

RestorationResult admm_restore(const Image& y, const DegradationModel& model,
                               const RestorationConfig& config, const Denoiser& denoiser,
                               const SwitchHook& on_switch) {
  config.validate();
  if (!y.all_finite()) throw DataError("observation contains non-finite pixels");
  const DataTermSolver solver(y, model, config.mu);
  const double sigma_eff = config.sigma_eff();

  AdmmState state{y, y, Image(y.height(), y.width(), 0.0), config.mu, 0};
  std::optional<LabelField> labels;
  RestorationResult result{y, LabelField(), {}};

  for (int k = 1; k <= config.max_iters; ++k) {
    const auto start = std::chrono::steady_clock::now();
    Image x_new = solver.solve(Image(state.v.pixels() + state.d.pixels()));
    if (!x_new.all_finite()) throw DivergenceError(k, "x-update diverged at iteration " + std::to_string(k));
    const double prev_norm = norm(state.x);
    const double change = (x_new.pixels() - state.x.pixels()).norm();
    const double rel_change = prev_norm > 0.0 ? change / prev_norm : change;
    state.x = std::move(x_new);

    DenoiserOutput den = denoiser(Image(state.x.pixels() - state.d.pixels()), sigma_eff, k, labels);
    if (!den.v.same_shape(y) || !den.v.all_finite()) {
      throw DivergenceError(k, "v-update diverged at iteration " + std::to_string(k));
    }
    state.v = std::move(den.v);
    state.d = dual_update(state);
    state.k = k;
    if (!state.d.all_finite()) throw DivergenceError(k, "dual update diverged at iteration " + std::to_string(k));

    long long changed = 0;
    if (den.labels && labels && den.labels->labels.size() == labels->labels.size()) {
      for (std::size_t i = 0; i < labels->labels.size(); ++i) {
        changed += den.labels->labels[i] != labels->labels[i];
      }
    }
    if (den.labels) labels = std::move(den.labels);

    IterationRecord rec;
    rec.k = k;
    rec.primal_residual = (state.x.pixels() - state.v.pixels()).norm();
    rec.relative_change = rel_change;
    rec.sigma_eff = sigma_eff;
    rec.labels_changed = changed;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.diagnostics.iterations.push_back(rec);

    if (config.switch_iteration && k == *config.switch_iteration && k < config.max_iters &&
        on_switch) {
      on_switch(state);
      result.diagnostics.switched_at = k;
    }
    // x_1 = y for the identity operator, so the first step carries no signal.
    if (k > 1 && rel_change < config.rel_tol) {
      result.diagnostics.converged = true;
      break;
    }
  }
  result.image = state.x;
  if (labels) result.labels = std::move(*labels);
  return result;
}

RestorationResult restore(const Image& y, const DegradationModel& model,
                          const ClassLibrary& library, const RestorationConfig& config) {
  if (library.patch_size() != config.patch_size) {
    throw ArgumentError("library patch size " + std::to_string(library.patch_size()) +
                        " does not match configured patch size " +
                        std::to_string(config.patch_size));
  }
  ClassLibrary current = library;
  Denoiser denoiser = [&](const Image& z, double sigma, int, const std::optional<LabelField>& prev) {
    VUpdateResult r = denoise_image(z, sigma, current, config, prev);
    return DenoiserOutput{std::move(r.v), std::move(r.labels)};
  };
  SwitchHook on_switch = [&](const AdmmState& state) {
    current = gmm_switch(state, current, config);
  };
  return admm_restore(y, model, config, denoiser, on_switch);
}

}  // namespace pnpgmm
