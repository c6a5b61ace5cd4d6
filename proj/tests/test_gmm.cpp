#include <doctest.h>

#include <cmath>
#include <random>

#include "pnpgmm/errors.hpp"
#include "pnpgmm/gmm.hpp"
#include "test_support.hpp"

using namespace pnpgmm;
namespace t = pnpgmm::testing;

TEST_CASE("model validation") {
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(4);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  CHECK_NOTHROW(GmmModel(2, {1.0}, {mu}, {id}));
  CHECK_THROWS_AS(GmmModel(2, {0.7}, {mu}, {id}), DataError);
  CHECK_THROWS(GmmModel(2, {1.0}, {mu}, {1e-6 * id}));
  Eigen::MatrixXd skew = id;
  skew(0, 1) = 0.5;
  CHECK_THROWS(GmmModel(2, {1.0}, {mu}, {skew}));
  CHECK_THROWS_AS(GmmModel(3, {1.0}, {mu}, {id}), ArgumentError);

  const GmmModel v = GmmModel::over_vectors({1.0}, {Eigen::VectorXd::Zero(3)},
                                            {Eigen::MatrixXd::Identity(3, 3)});
  CHECK(v.dim() == 3);
  CHECK(v.patch_size() == 0);
}

TEST_CASE("cached eigendecomposition reproduces the covariance") {
  std::mt19937_64 rng(2);
  const GmmModel m = t::random_model(3, 3, rng);
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXd& u = m.eigenvectors(k);
    const Eigen::MatrixXd rebuilt = u * m.eigenvalues(k).asDiagonal() * u.transpose();
    CHECK((rebuilt - m.covariance(k)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("class_log_likelihood") {
  const GmmModel std_normal = GmmModel::over_vectors({1.0}, {Eigen::VectorXd::Zero(1)},
                                                     {Eigen::MatrixXd::Ones(1, 1)});
  CHECK(class_log_likelihood(Eigen::VectorXd::Zero(1), std_normal, 0.0) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));

  std::mt19937_64 rng(5);
  SUBCASE("noise folded into the covariance") {
    const GmmModel m = t::random_model(3, 2, rng);
    const double sigma = 1.7;
    const GmmModel folded = m.with_added_noise(sigma);
    for (int i = 0; i < 10; ++i) {
      const Eigen::VectorXd y = t::random_matrix(4, 1, rng, -4, 4);
      CHECK(class_log_likelihood(y, m, sigma) ==
            doctest::Approx(class_log_likelihood(y, folded, 0.0)).epsilon(1e-12));
    }
  }
  SUBCASE("closed-form 2-D oracle") {
    for (int trial = 0; trial < 30; ++trial) {
      const GmmModel m = t::random_vector_model(2, 2, rng);
      const Eigen::Vector2d y = t::random_matrix(2, 1, rng, -4, 4);
      const double sigma = 0.5;
      double density = 0.0;
      for (int k = 0; k < 2; ++k) {
        const Eigen::Matrix2d c =
            m.covariance(k) + sigma * sigma * Eigen::Matrix2d::Identity();
        density += m.weight(k) * t::gaussian_density_2d(y(0), y(1), m.mean(k), c);
      }
      CHECK(std::abs(class_log_likelihood(y, m, sigma) - std::log(density)) <
            1e-10 * std::max(1.0, std::abs(std::log(density))));
    }
  }
  SUBCASE("higher dimension against a Cholesky evaluation") {
    const GmmModel m = t::random_model(3, 3, rng);
    for (int i = 0; i < 5; ++i) {
      const Eigen::VectorXd y = t::random_matrix(9, 1, rng, -3, 3);
      double density = 0.0;
      for (int k = 0; k < 3; ++k) {
        Eigen::MatrixXd c = m.covariance(k);
        c.diagonal().array() += 0.25;
        density += m.weight(k) * t::gaussian_density(y, m.mean(k), c);
      }
      CHECK(class_log_likelihood(y, m, 0.5) == doctest::Approx(std::log(density)).epsilon(1e-10));
    }
  }
}

TEST_CASE("component_posteriors") {
  std::mt19937_64 rng(17);
  SUBCASE("single component") {
    const GmmModel m = t::random_model(1, 2, rng);
    const Eigen::VectorXd b = component_posteriors(t::random_matrix(4, 1, rng), m, 1.0);
    REQUIRE(b.size() == 1);
    CHECK(b(0) == 1.0);
  }
  SUBCASE("symmetric pair at the midpoint") {
    Eigen::VectorXd mu(4);
    mu << 1, -2, 3, 0.5;
    const Eigen::MatrixXd c = t::random_spd(4, rng);
    const GmmModel m(2, {0.5, 0.5}, {mu, -mu}, {c, c});
    const Eigen::VectorXd b = component_posteriors(Eigen::VectorXd::Zero(4), m, 0.8);
    CHECK(std::abs(b(0) - 0.5) < 1e-12);
    CHECK(std::abs(b(1) - 0.5) < 1e-12);
  }
  SUBCASE("closed-form 2-D oracle, K = 3") {
    for (int trial = 0; trial < 50; ++trial) {
      const GmmModel m = t::random_vector_model(3, 2, rng);
      const Eigen::Vector2d y = t::random_matrix(2, 1, rng, -4, 4);
      const double sigma = 0.3 + 0.1 * (trial % 7);
      Eigen::Vector3d dens;
      for (int k = 0; k < 3; ++k) {
        const Eigen::Matrix2d c =
            m.covariance(k) + sigma * sigma * Eigen::Matrix2d::Identity();
        dens(k) = m.weight(k) * t::gaussian_density_2d(y(0), y(1), m.mean(k), c);
      }
      dens /= dens.sum();
      const Eigen::VectorXd b = component_posteriors(y, m, sigma);
      CHECK((b - dens).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("normalized for far-away inputs") {
    const GmmModel m = t::random_model(4, 2, rng);
    for (double scale : {1.0, 1e3, 1e6}) {
      const Eigen::VectorXd y = scale * t::random_matrix(4, 1, rng, -1, 1);
      const Eigen::VectorXd b = component_posteriors(y, m, 0.1);
      CHECK(std::abs(b.sum() - 1.0) < 1e-12);
      CHECK((b.array() >= 0.0).all());
    }
  }
  SUBCASE("log normalization ignores a common shift") {
    Eigen::MatrixXd a = t::random_matrix(5, 7, rng, -50, 0);
    Eigen::MatrixXd shifted = a.array() + 1234.5;
    normalize_log_columns(a);
    normalize_log_columns(shifted);
    CHECK((a - shifted).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("mmse_denoise_patch") {
  std::mt19937_64 rng(23);
  SUBCASE("isotropic single component is a scalar Wiener filter") {
    const double c = 9.0, sigma = 2.0;
    Eigen::VectorXd mu = t::random_matrix(9, 1, rng, 0, 100);
    const GmmModel m(3, {1.0}, {mu}, {c * Eigen::MatrixXd::Identity(9, 9)});
    const Eigen::VectorXd y = t::random_matrix(9, 1, rng, 0, 100);
    const PatchEstimate e = mmse_denoise_patch(y, m, sigma);
    const Eigen::VectorXd expected = mu + (c / (c + sigma * sigma)) * (y - mu);
    CHECK((e.estimate - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(e.variance == doctest::Approx(c * sigma * sigma / (c + sigma * sigma)));
  }
  SUBCASE("single component matches the conditional Gaussian mean") {
    for (int trial = 0; trial < 20; ++trial) {
      const int p = 1 + trial % 2;
      const Eigen::Index d = static_cast<Eigen::Index>(p) * p;
      const GmmModel m = t::random_model(1, p, rng, 5.0, 2.0);
      const Eigen::VectorXd y = t::random_matrix(d, 1, rng, -5, 5);
      const double sigma = 0.5 + trial * 0.1;
      const Eigen::MatrixXd& c = m.covariance(0);
      Eigen::MatrixXd s = c;
      s.diagonal().array() += sigma * sigma;
      const Eigen::VectorXd expected = m.mean(0) + c * s.ldlt().solve(y - m.mean(0));
      CHECK((mmse_denoise_patch(y, m, sigma).estimate - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
    for (Eigen::Index d : {3, 5, 8}) {
      const GmmModel m = t::random_vector_model(1, d, rng, 5.0, 2.0);
      const Eigen::VectorXd y = t::random_matrix(d, 1, rng, -5, 5);
      Eigen::MatrixXd s = m.covariance(0);
      s.diagonal().array() += 1.44;
      const Eigen::VectorXd expected =
          m.mean(0) + m.covariance(0) * s.ldlt().solve(y - m.mean(0));
      CHECK((mmse_denoise_patch(y, m, 1.2).estimate - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("huge noise returns the prior mean") {
    const GmmModel m = t::random_model(3, 2, rng);
    Eigen::VectorXd prior_mean = Eigen::VectorXd::Zero(4);
    for (int k = 0; k < 3; ++k) prior_mean += m.weight(k) * m.mean(k);
    const Eigen::VectorXd y = t::random_matrix(4, 1, rng, -3, 3);
    CHECK((mmse_denoise_patch(y, m, 1e6).estimate - prior_mean).cwiseAbs().maxCoeff() < 1e-4);
  }
  SUBCASE("2-D quadrature oracle") {
    for (int trial = 0; trial < 20; ++trial) {
      const GmmModel m = t::random_vector_model(2, 2, rng);
      const Eigen::Vector2d y = t::random_matrix(2, 1, rng, -4, 4);
      const double sigma = 0.4 + 0.1 * (trial % 10);
      const Eigen::Vector2d oracle = t::quadrature_posterior_mean_2d(m, y, sigma);
      CHECK((mmse_denoise_patch(y, m, sigma).estimate - oracle).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
  SUBCASE("variance summary") {
    const GmmModel m = t::random_model(3, 2, rng);
    const Eigen::VectorXd y = t::random_matrix(4, 1, rng, -3, 3);
    const double sigma = 0.9;
    const PatchEstimate e = mmse_denoise_patch(y, m, sigma);
    const Eigen::VectorXd b = component_posteriors(y, m, sigma);
    double expected = 0.0;
    for (int k = 0; k < 3; ++k) {
      Eigen::MatrixXd s = m.covariance(k);
      s.diagonal().array() += sigma * sigma;
      const Eigen::MatrixXd post = sigma * sigma * m.covariance(k) * s.inverse();
      const Eigen::VectorXd vk = m.mean(k) + m.covariance(k) * s.ldlt().solve(y - m.mean(k));
      expected += b(k) * (post.trace() + (vk - e.estimate).squaredNorm());
    }
    CHECK(e.variance == doctest::Approx(expected / 4.0).epsilon(1e-10));
  }
}

TEST_CASE("denoise_patchset") {
  std::mt19937_64 rng(31);
  const GmmModel m = t::random_model(4, 3, rng, 20.0, 4.0);
  PatchMatrix patches;
  patches.patch_size = 3;
  patches.grid_rows = 30;
  patches.grid_cols = 31;
  patches.data = t::random_matrix(9, 30 * 31, rng, -30, 30);

  SUBCASE("matches per-column calls") {
    const DenoisedPatchSet all = denoise_patchset(patches, m, 3.0);
    for (Eigen::Index j = 0; j < patches.count(); j += 37) {
      const PatchEstimate e = mmse_denoise_patch(patches.data.col(j), m, 3.0);
      CHECK(all.estimates.col(j) == e.estimate);
      CHECK(all.posterior_variances(j) == e.variance);
    }
    CHECK((all.posterior_variances.array() > 0.0).all());
    CHECK(all.posterior_variances.allFinite());
  }
  SUBCASE("identical columns give identical estimates") {
    patches.data.colwise() = patches.data.col(5).eval();
    const DenoisedPatchSet all = denoise_patchset(patches, m, 2.0);
    for (Eigen::Index j = 1; j < patches.count(); ++j) {
      CHECK(all.estimates.col(j) == all.estimates.col(0));
    }
  }
  SUBCASE("zero noise passes the input through") {
    const DenoisedPatchSet all = denoise_patchset(patches, m, 0.0);
    CHECK(all.estimates == patches.data);
  }
  SUBCASE("patch size mismatch") {
    const GmmModel other = t::random_model(2, 2, rng);
    CHECK_THROWS_AS(denoise_patchset(patches, other, 1.0), ArgumentError);
  }
}
