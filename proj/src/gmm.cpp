#include "pnpgmm/gmm.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {
namespace {

constexpr Eigen::Index kBlockColumns = 256;

// Whitened coordinates U_m^T (y - mu_m) and weighted log densities for a block
// of columns; reused by the posterior and estimate computations.
struct BlockWork {
  std::vector<Eigen::MatrixXd> coords;
  Eigen::MatrixXd log_dens;
};

void project_block(const GmmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                   double noise_var, BlockWork& work) {
  const int k = model.components();
  const double d = static_cast<double>(model.dim());
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  work.coords.resize(static_cast<std::size_t>(k));
  work.log_dens.resize(k, samples.cols());
  for (int m = 0; m < k; ++m) {
    const Eigen::ArrayXd var = model.eigenvalues(m).array() + noise_var;
    const double log_det = var.log().sum();
    Eigen::MatrixXd& z = work.coords[static_cast<std::size_t>(m)];
    z.noalias() = model.eigenvectors(m).transpose() * (samples.colwise() - model.mean(m));
    const Eigen::ArrayXd inv_var = var.inverse();
    const double offset = model.log_weight(m) - 0.5 * (d * log_two_pi + log_det);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      double maha = 0.0;
      for (Eigen::Index i = 0; i < z.rows(); ++i) maha += z(i, j) * z(i, j) * inv_var[i];
      work.log_dens(m, j) = offset - 0.5 * maha;
    }
  }
}

// Runs `body(block, start, len, work)` over column blocks. Every block has
// exactly kBlockColumns columns (a short tail is padded by repeating its last
// column), so the arithmetic applied to a column never depends on its position
// in the batch: one column alone gives bit-identical results.
template <typename Body>
void for_each_block(const Eigen::Ref<const Eigen::MatrixXd>& samples, Body&& body) {
  const Eigen::Index n = samples.cols();
#pragma omp parallel
  {
    BlockWork work;
    Eigen::MatrixXd padded;
#pragma omp for schedule(static)
    for (Eigen::Index start = 0; start < n; start += kBlockColumns) {
      const Eigen::Index len = std::min(kBlockColumns, n - start);
      if (len == kBlockColumns) {
        body(samples.middleCols(start, len), start, len, work);
      } else {
        padded.resize(samples.rows(), kBlockColumns);
        padded.leftCols(len) = samples.middleCols(start, len);
        padded.rightCols(kBlockColumns - len).colwise() = samples.col(start + len - 1);
        body(padded, start, len, work);
      }
    }
  }
}

void check_samples(const GmmModel& model, Eigen::Index rows, double sigma) {
  if (rows != model.dim()) {
    throw ArgumentError("sample dimension " + std::to_string(rows) + " does not match model d=" +
                        std::to_string(model.dim()));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("noise standard deviation must be finite and non-negative");
  }
}

void denoise_block(const GmmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                   double sigma, BlockWork& work, Eigen::Ref<Eigen::MatrixXd> estimates,
                   Eigen::Ref<Eigen::VectorXd> variances) {
  const double noise_var = sigma * sigma;
  const int k = model.components();
  const double d = static_cast<double>(model.dim());
  project_block(model, samples, noise_var, work);
  normalize_log_columns(work.log_dens);
  const Eigen::MatrixXd& beta = work.log_dens;

  estimates.setZero();
  Eigen::ArrayXd trace_terms = Eigen::ArrayXd::Zero(samples.cols());
  for (int m = 0; m < k; ++m) {
    const Eigen::ArrayXd& lambda = model.eigenvalues(m).array();
    const Eigen::ArrayXd shrink = lambda / (lambda + noise_var);
    const double posterior_trace = (noise_var * shrink).sum();
    Eigen::MatrixXd& z = work.coords[static_cast<std::size_t>(m)];
    // Overwrite the whitened coordinates with the component estimate v_m.
    Eigen::MatrixXd v = model.eigenvectors(m) * (z.array().colwise() * shrink).matrix();
    v.colwise() += model.mean(m);
    z = std::move(v);
    estimates += (z.array().rowwise() * beta.row(m).array()).matrix();
    trace_terms += posterior_trace * beta.row(m).transpose().array();
  }
  Eigen::ArrayXd spread = Eigen::ArrayXd::Zero(samples.cols());
  for (int m = 0; m < k; ++m) {
    const Eigen::MatrixXd& v = work.coords[static_cast<std::size_t>(m)];
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      double dist = 0.0;
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double e = v(i, j) - estimates(i, j);
        dist += e * e;
      }
      spread[j] += beta(m, j) * dist;
    }
  }
  variances = ((trace_terms + spread) / d).matrix();
}

}  // namespace

GmmModel::GmmModel(int patch_size, std::vector<double> weights,
                   std::vector<Eigen::VectorXd> means, std::vector<Eigen::MatrixXd> covariances,
                   double covariance_floor)
    : GmmModel(patch_size, static_cast<Eigen::Index>(patch_size) * patch_size, std::move(weights),
               std::move(means), std::move(covariances), covariance_floor) {
  if (patch_size_ < 1) throw ArgumentError("patch size must be positive");
}

GmmModel GmmModel::over_vectors(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
                                std::vector<Eigen::MatrixXd> covariances,
                                double covariance_floor) {
  if (means.empty()) throw ArgumentError("mixture needs at least one component");
  const Eigen::Index d = means.front().size();
  if (d < 1) throw ArgumentError("mixture dimension must be positive");
  return GmmModel(0, d, std::move(weights), std::move(means), std::move(covariances),
                  covariance_floor);
}

GmmModel::GmmModel(int patch_size, Eigen::Index dim, std::vector<double> weights,
                   std::vector<Eigen::VectorXd> means, std::vector<Eigen::MatrixXd> covariances,
                   double covariance_floor)
    : patch_size_(patch_size),
      dim_(dim),
      floor_(covariance_floor),
      weights_(std::move(weights)),
      means_(std::move(means)),
      covariances_(std::move(covariances)) {
  if (!(floor_ > 0.0)) throw ArgumentError("covariance floor must be positive");
  const std::size_t k = weights_.size();
  if (k == 0) throw ArgumentError("mixture needs at least one component");
  if (means_.size() != k || covariances_.size() != k) {
    throw ArgumentError("mixture weights, means and covariances differ in count");
  }
  const Eigen::Index d = dim_;
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("mixture weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DataError("mixture weights sum to " + std::to_string(total) + ", not 1");
  }
  log_weights_.reserve(k);
  eigenvalues_.reserve(k);
  eigenvectors_.reserve(k);
  for (std::size_t m = 0; m < k; ++m) {
    const Eigen::VectorXd& mu = means_[m];
    const Eigen::MatrixXd& c = covariances_[m];
    if (mu.size() != d || c.rows() != d || c.cols() != d) {
      throw ArgumentError("component " + std::to_string(m) + " does not match d=" +
                          std::to_string(d));
    }
    if (!mu.allFinite() || !c.allFinite()) {
      throw DataError("component " + std::to_string(m) + " has non-finite parameters");
    }
    if ((c - c.transpose()).cwiseAbs().maxCoeff() >= 1e-10) {
      throw DataError("covariance " + std::to_string(m) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) {
      throw DataError("eigendecomposition failed for covariance " + std::to_string(m));
    }
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    // Reconstructing a floored covariance perturbs its eigenvalues by O(eps * |C|).
    if (lo < floor_ * (1.0 - 1e-6) - 1e-12 * std::abs(hi)) {
      throw DataError("covariance " + std::to_string(m) + " has eigenvalue " +
                      std::to_string(lo) + " below the floor");
    }
    log_weights_.push_back(weights_[m] > 0.0 ? std::log(weights_[m])
                                             : -std::numeric_limits<double>::infinity());
    eigenvalues_.push_back(eig.eigenvalues());
    eigenvectors_.push_back(eig.eigenvectors());
  }
}

GmmModel GmmModel::with_added_noise(double sigma) const {
  std::vector<Eigen::MatrixXd> covs = covariances_;
  for (auto& c : covs) c.diagonal().array() += sigma * sigma;
  return GmmModel(patch_size_, dim_, weights_, means_, std::move(covs), floor_);
}

bool operator==(const GmmModel& a, const GmmModel& b) {
  return a.patch_size_ == b.patch_size_ && a.dim_ == b.dim_ && a.weights_ == b.weights_ && a.means_ == b.means_ &&
         a.covariances_ == b.covariances_;
}

Eigen::VectorXd normalize_log_columns(Eigen::MatrixXd& log_weights) {
  Eigen::VectorXd norms(log_weights.cols());
  for (Eigen::Index j = 0; j < log_weights.cols(); ++j) {
    auto col = log_weights.col(j);
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < col.size(); ++m) top = std::max(top, col[m]);
    if (!std::isfinite(top)) throw DataError("no component assigns finite density to sample");
    double total = 0.0;
    for (Eigen::Index m = 0; m < col.size(); ++m) total += std::exp(col[m] - top);
    const double lse = top + std::log(total);
    for (Eigen::Index m = 0; m < col.size(); ++m) col[m] = std::exp(col[m] - lse);
    norms[j] = lse;
  }
  return norms;
}

Eigen::MatrixXd weighted_component_log_densities(const GmmModel& model,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                                 double sigma) {
  check_samples(model, samples.rows(), sigma);
  Eigen::MatrixXd out(model.components(), samples.cols());
  for_each_block(samples, [&](const Eigen::Ref<const Eigen::MatrixXd>& block, Eigen::Index start,
                              Eigen::Index len, BlockWork& work) {
    project_block(model, block, sigma * sigma, work);
    out.middleCols(start, len) = work.log_dens.leftCols(len);
  });
  return out;
}

Eigen::VectorXd class_log_likelihoods(const GmmModel& model,
                                      const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                      double sigma) {
  Eigen::MatrixXd log_dens = weighted_component_log_densities(model, samples, sigma);
  return normalize_log_columns(log_dens);
}

double class_log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& y, const GmmModel& model,
                            double sigma) {
  return class_log_likelihoods(model, y, sigma)[0];
}

Eigen::VectorXd component_posteriors(const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const GmmModel& model, double sigma) {
  Eigen::MatrixXd log_dens = weighted_component_log_densities(model, y, sigma);
  normalize_log_columns(log_dens);
  return log_dens.col(0);
}

DenoisedPatchSet denoise_columns(const GmmModel& model,
                                 const Eigen::Ref<const Eigen::MatrixXd>& samples, double sigma) {
  check_samples(model, samples.rows(), sigma);
  DenoisedPatchSet out;
  const Eigen::Index n = samples.cols();
  if (sigma == 0.0) {
    out.estimates = samples;
    out.posterior_variances = Eigen::VectorXd::Constant(n, model.covariance_floor());
    return out;
  }
  out.estimates.resize(samples.rows(), n);
  out.posterior_variances.resize(n);
  for_each_block(samples, [&](const Eigen::Ref<const Eigen::MatrixXd>& block, Eigen::Index start,
                              Eigen::Index len, BlockWork& work) {
    Eigen::MatrixXd estimates(block.rows(), block.cols());
    Eigen::VectorXd variances(block.cols());
    denoise_block(model, block, sigma, work, estimates, variances);
    out.estimates.middleCols(start, len) = estimates.leftCols(len);
    out.posterior_variances.segment(start, len) = variances.head(len);
  });
  return out;
}

PatchEstimate mmse_denoise_patch(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const GmmModel& model, double sigma) {
  DenoisedPatchSet set = denoise_columns(model, y, sigma);
  return {set.estimates.col(0), set.posterior_variances[0]};
}

DenoisedPatchSet denoise_patchset(const PatchMatrix& patches, const GmmModel& model,
                                  double sigma) {
  if (patches.patch_size != model.patch_size()) {
    throw ArgumentError("patch size " + std::to_string(patches.patch_size) +
                        " does not match model patch size " +
                        std::to_string(model.patch_size()));
  }
  return denoise_columns(model, patches.data, sigma);
}

}  // namespace pnpgmm
