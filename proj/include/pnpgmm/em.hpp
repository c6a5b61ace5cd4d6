#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "pnpgmm/gmm.hpp"
#include "pnpgmm/patches.hpp"

namespace pnpgmm {

struct EmOptions {
  int components = 20;
  std::uint64_t seed = 0;
  int max_iters = 100;
  double tol = 1e-6;  // relative change of the average log-likelihood
  double covariance_floor = kCovarianceFloor;
};

struct EmResult {
  GmmModel model;
  /// Average per-sample log-likelihood of the (noisy-domain) data, one entry
  /// per evaluated model: the k-means++ initialization first, the returned
  /// model last.
  std::vector<double> log_likelihood;
  int iterations = 0;  // M-steps performed after initialization
  bool converged = false;
};

/// Maximum-likelihood mixture fit to clean samples (columns of `samples`).
///
/// Initialization: k-means++ seeding on a random subsample of min(N, 50K)
/// columns, then one hard-assignment M-step over all columns. Each M-step
/// floors covariance eigenvalues at the covariance floor, which is the
/// constrained maximizer, so the likelihood trace never decreases.
EmResult em_fit_clean(const Eigen::Ref<const Eigen::MatrixXd>& samples, int patch_size,
                      const EmOptions& options);
EmResult em_fit_clean(const PatchMatrix& patches, const EmOptions& options);

/// Mixture fit for the clean-patch distribution from samples corrupted by
/// white Gaussian noise of standard deviation sigma. Responsibilities use
/// N(y; mu_m, C_m + sigma^2 I); each M-step sets C_m to the noisy-domain
/// covariance minus sigma^2 I with eigenvalues floored. With sigma == 0 this
/// is exactly em_fit_clean.
EmResult em_fit_noisy(const Eigen::Ref<const Eigen::MatrixXd>& samples, int patch_size,
                      double sigma, const EmOptions& options);
EmResult em_fit_noisy(const PatchMatrix& patches, double sigma, const EmOptions& options);

/// Uniform random subset of at most `max_count` columns (order preserved).
Eigen::MatrixXd subsample_columns(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                  Eigen::Index max_count, std::uint64_t seed);

}  // namespace pnpgmm
