#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "pnpgmm/classifier.hpp"
#include "pnpgmm/convolution.hpp"
#include "pnpgmm/image.hpp"

namespace pnpgmm {

/// y = A x + n with A the identity or a periodic convolution, n ~ N(0, sigma^2 I).
struct DegradationModel {
  std::optional<BlurKernel> kernel;  // empty: identity operator
  double sigma = 0.0;

  static DegradationModel identity(double sigma);
  static DegradationModel convolution(BlurKernel kernel, double sigma);

  bool is_identity() const { return !kernel.has_value(); }
  Image apply(const Image& x) const;
  Image apply_adjoint(const Image& x) const;
};

struct AdmmState {
  Image x;
  Image v;
  Image d;  // scaled dual
  double mu = 1.0;
  int k = 0;
};

struct RestorationConfig {
  int patch_size = 6;
  /// Penalty of the normalized problem (1/2 sigma^2)|Ax - y|^2 + phi(x). The
  /// denoiser runs at sigma_eff = 1/sqrt(mu); the x-update sees mu * sigma^2.
  double mu = 0.05;
  int max_iters = 200;
  double rel_tol = 1e-4;
  ClassifyMode classify_mode = ClassifyMode::none;
  double beta = 2.0;
  /// Iteration after which the generic model is retrained from x; empty (or a
  /// value >= max_iters) disables.
  std::optional<int> switch_iteration = 100;
  int switch_components = 20;
  /// Patches used for the switch retraining (random subset of x's patches).
  Eigen::Index switch_max_patches = 20000;
  int switch_em_iters = 100;
  int expansion_cycles = 10;
  std::uint64_t seed = 0;

  void validate() const;
  double sigma_eff() const;
};

/// Solves the x-subproblem (A^T A + mu sigma^2 I) x = A^T y + mu sigma^2 t in
/// the frequency domain for repeated right-hand sides t = v + d.
class DataTermSolver {
 public:
  DataTermSolver(const Image& y, const DegradationModel& model, double mu);
  Image solve(const Image& target) const;

 private:
  Eigen::Index height_;
  Eigen::Index width_;
  double penalty_;
  std::optional<Image> y_;  // identity operator
  ComplexMatrix numerator_;  // conj(H) . F(y)
  Eigen::MatrixXd denominator_;  // |H|^2 + penalty
};

Image x_update(const AdmmState& state, const Image& y, const DegradationModel& model);

struct VUpdateResult {
  Image v;
  LabelField labels;
};

/// Multi-class GMM denoising of z = x - d at sigma_eff: classify every patch,
/// denoise it with its class model and aggregate with inverse posterior
/// variance weights.
VUpdateResult v_update(const AdmmState& state, const ClassLibrary& library,
                       const RestorationConfig& config,
                       const std::optional<LabelField>& previous = std::nullopt);

/// The same denoiser applied directly to an image.
VUpdateResult denoise_image(const Image& z, double sigma, const ClassLibrary& library,
                            const RestorationConfig& config,
                            const std::optional<LabelField>& previous = std::nullopt);

/// d - (x - v).
Image dual_update(const AdmmState& state);

/// Retrains the generic class from the patches of state.x (treated as clean).
ClassLibrary gmm_switch(const AdmmState& state, const ClassLibrary& library,
                        const RestorationConfig& config);

struct IterationRecord {
  int k = 0;
  double primal_residual = 0.0;  // |x - v|_2
  double relative_change = 0.0;  // |x_k - x_{k-1}|_2 / |x_{k-1}|_2
  double sigma_eff = 0.0;
  long long labels_changed = 0;
  double wall_ms = 0.0;
};

struct Diagnostics {
  std::vector<IterationRecord> iterations;
  bool converged = false;
  std::optional<int> switched_at;

  void write_csv(const std::filesystem::path& path) const;
};

struct RestorationResult {
  Image image;
  LabelField labels;
  Diagnostics diagnostics;
};

struct DenoiserOutput {
  Image v;
  std::optional<LabelField> labels;
};

/// v-step callback: (z = x - d, sigma_eff, iteration k, previous labels).
using Denoiser = std::function<DenoiserOutput(const Image&, double, int,
                                              const std::optional<LabelField>&)>;
/// Called once after iteration `switch_iteration` with the current state.
using SwitchHook = std::function<void(const AdmmState&)>;

/// Plug-and-play ADMM with an arbitrary denoiser: x = v = y, d = 0, then
/// x-update, v-update, dual update until max_iters or the relative change of
/// x drops below rel_tol. Throws DivergenceError on a non-finite iterate.
RestorationResult admm_restore(const Image& y, const DegradationModel& model,
                               const RestorationConfig& config, const Denoiser& denoiser,
                               const SwitchHook& on_switch = {});

/// ADMM with the multi-class GMM denoiser and the generic-model switch.
RestorationResult restore(const Image& y, const DegradationModel& model,
                          const ClassLibrary& library, const RestorationConfig& config);

}  // namespace pnpgmm
