#include "pnpgmm/em.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {
namespace {

// Components whose total responsibility falls below this keep their previous
// mean and covariance.
constexpr double kDeadComponentMass = 1e-8;

// Covariance estimate for one component: subtract the noise variance and floor
// the eigenvalues. This is the maximizer of the expected complete-data
// log-likelihood subject to C >= floor * I.
Eigen::MatrixXd floored_covariance(const Eigen::MatrixXd& scatter, double noise_var,
                                   double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
  if (eig.info() != Eigen::Success) throw DataError("eigendecomposition failed in EM M-step");
  const Eigen::VectorXd lambda = (eig.eigenvalues().array() - noise_var).max(floor).matrix();
  Eigen::MatrixXd c = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (c + c.transpose());
}

Eigen::MatrixXd weighted_scatter(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                 const Eigen::VectorXd& mean,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& resp, double mass) {
  Eigen::MatrixXd centered = samples.colwise() - mean;
  centered.array().rowwise() *= resp.array().sqrt();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(samples.rows(), samples.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s / mass;
}

std::vector<Eigen::Index> sample_indices(Eigen::Index n, Eigen::Index count, std::mt19937_64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (count >= n) return idx;
  // Partial Fisher-Yates.
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Eigen::MatrixXd kmeans_pp_centers(const Eigen::Ref<const Eigen::MatrixXd>& samples, int k,
                                  std::mt19937_64& rng) {
  const Eigen::Index n = samples.cols();
  const auto sub = sample_indices(n, std::min<Eigen::Index>(n, Eigen::Index{50} * k), rng);
  const Eigen::Index s = static_cast<Eigen::Index>(sub.size());

  Eigen::MatrixXd centers(samples.rows(), k);
  std::uniform_int_distribution<Eigen::Index> first(0, s - 1);
  centers.col(0) = samples.col(sub[static_cast<std::size_t>(first(rng))]);
  Eigen::VectorXd dist2(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    dist2[i] = (samples.col(sub[static_cast<std::size_t>(i)]) - centers.col(0)).squaredNorm();
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = s - 1;
      for (Eigen::Index i = 0; i < s; ++i) {
        acc += dist2[i];
        if (acc > target && dist2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);
    }
    centers.col(c) = samples.col(sub[static_cast<std::size_t>(chosen)]);
    for (Eigen::Index i = 0; i < s; ++i) {
      dist2[i] = std::min(dist2[i],
                          (samples.col(sub[static_cast<std::size_t>(i)]) - centers.col(c)).squaredNorm());
    }
  }
  return centers;
}

GmmModel hard_assignment_model(const Eigen::Ref<const Eigen::MatrixXd>& samples, int patch_size,
                               const Eigen::MatrixXd& centers, double noise_var, double floor) {
  const Eigen::Index n = samples.cols();
  const Eigen::Index d = samples.rows();
  const int k = static_cast<int>(centers.cols());

  // Nearest centre via |y|^2 - 2 y.c + |c|^2; ties go to the lower index.
  const Eigen::MatrixXd cross = centers.transpose() * samples;
  const Eigen::VectorXd center_norms = centers.colwise().squaredNorm().transpose();
  std::vector<int> assign(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double dist = center_norms[c] - 2.0 * cross(c, j);
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    assign[static_cast<std::size_t>(j)] = best;
    ++counts[static_cast<std::size_t>(best)];
  }

  const Eigen::VectorXd global_mean = samples.rowwise().mean();
  const Eigen::MatrixXd global_cov =
      weighted_scatter(samples, global_mean, Eigen::RowVectorXd::Ones(n), static_cast<double>(n));

  std::vector<double> weights(static_cast<std::size_t>(k));
  std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(k));
  std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const Eigen::Index count = counts[static_cast<std::size_t>(c)];
    weights[static_cast<std::size_t>(c)] = static_cast<double>(count) / static_cast<double>(n);
    if (count == 0) {
      means[static_cast<std::size_t>(c)] = centers.col(c);
      covs[static_cast<std::size_t>(c)] = floored_covariance(global_cov, noise_var, floor);
      continue;
    }
    Eigen::MatrixXd members(d, count);
    Eigen::Index at = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (assign[static_cast<std::size_t>(j)] == c) members.col(at++) = samples.col(j);
    }
    const Eigen::VectorXd mu = members.rowwise().mean();
    means[static_cast<std::size_t>(c)] = mu;
    covs[static_cast<std::size_t>(c)] = floored_covariance(
        weighted_scatter(members, mu, Eigen::RowVectorXd::Ones(count), static_cast<double>(count)),
        noise_var, floor);
  }
  // Renormalize against rounding in count / n.
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  return GmmModel(patch_size, std::move(weights), std::move(means), std::move(covs), floor);
}

EmResult fit(const Eigen::Ref<const Eigen::MatrixXd>& samples, int patch_size, double sigma,
             const EmOptions& options) {
  const Eigen::Index n = samples.cols();
  const Eigen::Index d = samples.rows();
  const int k = options.components;
  if (patch_size < 1 || d != static_cast<Eigen::Index>(patch_size) * patch_size) {
    throw ArgumentError("sample dimension does not match patch size");
  }
  if (k < 1) throw ArgumentError("EM needs at least one component");
  if (k > n) {
    throw ArgumentError("EM with K=" + std::to_string(k) + " needs at least K samples, got " +
                        std::to_string(n));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("noise standard deviation must be finite and non-negative");
  }
  if (options.max_iters < 0) throw ArgumentError("max_iters must be non-negative");
  if (!samples.allFinite()) throw DataError("training samples contain non-finite values");

  const double noise_var = sigma * sigma;
  const double floor = options.covariance_floor;
  std::mt19937_64 rng(options.seed);
  const Eigen::MatrixXd centers = kmeans_pp_centers(samples, k, rng);
  GmmModel model = hard_assignment_model(samples, patch_size, centers, noise_var, floor);

  EmResult result{model, {}, 0, false};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int iter = 0;; ++iter) {
    // E-step on the current model.
    Eigen::MatrixXd resp = weighted_component_log_densities(result.model, samples, sigma);
    const double avg_ll = normalize_log_columns(resp).sum() * inv_n;
    result.log_likelihood.push_back(avg_ll);
    if (iter > 0) {
      const double prev = result.log_likelihood[result.log_likelihood.size() - 2];
      if (avg_ll - prev < options.tol * std::abs(prev)) {
        result.converged = true;
        break;
      }
    }
    if (iter == options.max_iters) break;

    // M-step.
    std::vector<double> weights(static_cast<std::size_t>(k));
    std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(k));
    std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(k));
    const Eigen::VectorXd mass = resp.rowwise().sum();
    for (int m = 0; m < k; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      weights[mi] = mass[m] * inv_n;
      if (mass[m] < kDeadComponentMass) {
        means[mi] = result.model.mean(m);
        covs[mi] = result.model.covariance(m);
        continue;
      }
      means[mi] = samples * resp.row(m).transpose() / mass[m];
      covs[mi] = floored_covariance(weighted_scatter(samples, means[mi], resp.row(m), mass[m]),
                                    noise_var, floor);
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
    result.model = GmmModel(patch_size, std::move(weights), std::move(means), std::move(covs), floor);
    result.iterations = iter + 1;
  }
  return result;
}

}  // namespace

EmResult em_fit_clean(const Eigen::Ref<const Eigen::MatrixXd>& samples, int patch_size,
                      const EmOptions& options) {
  return fit(samples, patch_size, 0.0, options);
}

EmResult em_fit_clean(const PatchMatrix& patches, const EmOptions& options) {
  return fit(patches.data, patches.patch_size, 0.0, options);
}

EmResult em_fit_noisy(const Eigen::Ref<const Eigen::MatrixXd>& samples, int patch_size,
                      double sigma, const EmOptions& options) {
  if (sigma < 0.0) throw ArgumentError("noise standard deviation must be non-negative");
  return fit(samples, patch_size, sigma, options);
}

EmResult em_fit_noisy(const PatchMatrix& patches, double sigma, const EmOptions& options) {
  return em_fit_noisy(patches.data, patches.patch_size, sigma, options);
}

Eigen::MatrixXd subsample_columns(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                  Eigen::Index max_count, std::uint64_t seed) {
  if (max_count < 1) throw ArgumentError("subsample size must be positive");
  if (samples.cols() <= max_count) return samples;
  std::mt19937_64 rng(seed);
  const auto idx = sample_indices(samples.cols(), max_count, rng);
  Eigen::MatrixXd out(samples.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = samples.col(idx[i]);
  }
  return out;
}

}  // namespace pnpgmm
