#pragma once

#include <vector>

#include <Eigen/Core>

#include "pnpgmm/patches.hpp"

namespace pnpgmm {

/// Eigenvalue floor for component covariances, on the [0, 255] intensity scale.
inline constexpr double kCovarianceFloor = 1e-4;

/// Gaussian mixture over vectorized p x p patches (d = p * p).
///
/// Immutable once constructed. The constructor validates the mixture (weights
/// on the simplex, symmetric covariances whose smallest eigenvalue respects
/// the floor) and caches an eigendecomposition of every covariance, which all
/// evaluation routines use.
class GmmModel {
 public:
  GmmModel(int patch_size, std::vector<double> weights, std::vector<Eigen::VectorXd> means,
           std::vector<Eigen::MatrixXd> covariances, double covariance_floor = kCovarianceFloor);

  /// Mixture over plain vectors whose dimension need not be a square; such a
  /// model reports patch_size() == 0 and cannot be applied to a PatchMatrix.
  static GmmModel over_vectors(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
                               std::vector<Eigen::MatrixXd> covariances,
                               double covariance_floor = kCovarianceFloor);

  int components() const { return static_cast<int>(weights_.size()); }
  int patch_size() const { return patch_size_; }
  Eigen::Index dim() const { return dim_; }
  double covariance_floor() const { return floor_; }

  const std::vector<double>& weights() const { return weights_; }
  double weight(int m) const { return weights_[m]; }
  double log_weight(int m) const { return log_weights_[m]; }
  const Eigen::VectorXd& mean(int m) const { return means_[m]; }
  const Eigen::MatrixXd& covariance(int m) const { return covariances_[m]; }
  /// Ascending eigenvalues and matching orthonormal eigenvectors (columns).
  const Eigen::VectorXd& eigenvalues(int m) const { return eigenvalues_[m]; }
  const Eigen::MatrixXd& eigenvectors(int m) const { return eigenvectors_[m]; }

  /// Copy of this model with sigma^2 * I added to every covariance.
  GmmModel with_added_noise(double sigma) const;

  friend bool operator==(const GmmModel& a, const GmmModel& b);

 private:
  GmmModel(int patch_size, Eigen::Index dim, std::vector<double> weights,
           std::vector<Eigen::VectorXd> means, std::vector<Eigen::MatrixXd> covariances,
           double covariance_floor);

  int patch_size_;
  Eigen::Index dim_;
  double floor_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::MatrixXd> covariances_;
  std::vector<Eigen::VectorXd> eigenvalues_;
  std::vector<Eigen::MatrixXd> eigenvectors_;
};

/// log(alpha_m) + log N(y_i; mu_m, C_m + sigma^2 I) for every component m
/// (rows) and column y_i of `samples` (columns).
Eigen::MatrixXd weighted_component_log_densities(const GmmModel& model,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                                 double sigma);

/// Per-column log of the mixture density under additive noise sigma.
Eigen::VectorXd class_log_likelihoods(const GmmModel& model,
                                      const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                      double sigma);

double class_log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& y, const GmmModel& model,
                            double sigma);

/// Posterior probability of each component having generated y (log-sum-exp normalized).
Eigen::VectorXd component_posteriors(const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const GmmModel& model, double sigma);

/// Column-wise log-sum-exp normalization of a K x N matrix of log weights:
/// each column is replaced by the normalized probabilities. Returns the
/// per-column log normalizers.
Eigen::VectorXd normalize_log_columns(Eigen::MatrixXd& log_weights);

struct PatchEstimate {
  Eigen::VectorXd estimate;
  double variance = 0.0;  // mean over coordinates of the posterior covariance diagonal
};

struct DenoisedPatchSet {
  Eigen::MatrixXd estimates;             // d x N
  Eigen::VectorXd posterior_variances;   // N
};

/// MMSE estimate of a clean patch given y = x + n, n ~ N(0, sigma^2 I), under
/// the mixture prior:
///   v_m = mu_m + C_m (C_m + sigma^2 I)^{-1} (y - mu_m),  x = sum_m beta_m v_m.
/// The variance is (1/d) * sum_m beta_m [tr(sigma^2 C_m (C_m + sigma^2 I)^{-1}) + |v_m - x|^2].
/// sigma == 0 returns y with the covariance floor as variance.
PatchEstimate mmse_denoise_patch(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const GmmModel& model, double sigma);

/// mmse_denoise_patch applied to every column.
DenoisedPatchSet denoise_columns(const GmmModel& model,
                                 const Eigen::Ref<const Eigen::MatrixXd>& samples, double sigma);

DenoisedPatchSet denoise_patchset(const PatchMatrix& patches, const GmmModel& model, double sigma);

}  // namespace pnpgmm
