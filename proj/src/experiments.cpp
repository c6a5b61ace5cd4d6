#include "pnpgmm/experiments.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pnpgmm/convolution.hpp"
#include "pnpgmm/errors.hpp"
#include "pnpgmm/metrics.hpp"

namespace pnpgmm {
namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

BlurKernel gaussian_kernel(int size, double std_dev) {
  Eigen::MatrixXd taps(size, size);
  const int half = size / 2;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double i = r - half, j = c - half;
      taps(r, c) = std::exp(-(i * i + j * j) / (2.0 * std_dev * std_dev));
    }
  }
  return BlurKernel(std::move(taps));
}

}  // namespace

double CounterGaussian::uniform(std::uint64_t counter) const {
  const std::uint64_t bits = splitmix64(splitmix64(seed_) ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double CounterGaussian::operator()(std::uint64_t index) const {
  const std::uint64_t pair = index >> 1;
  const double u1 = uniform(2 * pair);
  const double u2 = uniform(2 * pair + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

BlurKernel registry_kernel(int experiment) {
  switch (experiment) {
    case 1:
    case 2: {
      Eigen::MatrixXd taps(15, 15);
      for (int r = 0; r < 15; ++r)
        for (int c = 0; c < 15; ++c) {
          const double i = r - 7, j = c - 7;
          taps(r, c) = 1.0 / (1.0 + i * i + j * j);
        }
      return BlurKernel(std::move(taps));
    }
    case 3:
      return BlurKernel::box(9);
    case 4: {
      Eigen::VectorXd v(5);
      v << 1, 4, 6, 4, 1;
      return BlurKernel(v * v.transpose() / 256.0);
    }
    case 5:
      return gaussian_kernel(25, 1.6);
    case 6:
      return gaussian_kernel(25, 0.4);
    default:
      throw ArgumentError("registry experiments are numbered 1..6, got " +
                          std::to_string(experiment));
  }
}

ExperimentSpec registry_experiment(int experiment, const Image& reference, std::uint64_t seed) {
  ExperimentSpec spec;
  spec.name = "exp" + std::to_string(experiment);
  spec.kernel = registry_kernel(experiment);
  spec.seed = seed;
  switch (experiment) {
    case 1: spec.noise_variance = 2.0; break;
    case 2: spec.noise_variance = 8.0; break;
    case 3: {
      const double blurred_var = sample_variance(convolve_periodic_fft(reference, spec.kernel));
      spec.noise_variance = blurred_var / std::pow(10.0, kExperiment3Bsnr / 10.0);
      break;
    }
    case 4: spec.noise_variance = 49.0; break;
    case 5: spec.noise_variance = 4.0; break;
    case 6: spec.noise_variance = 64.0; break;
    default: break;
  }
  return spec;
}

ExperimentSpec denoising_experiment(double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise standard deviation must be non-negative");
  char name[64];
  std::snprintf(name, sizeof(name), "denoise_s%g", sigma);
  return ExperimentSpec{name, BlurKernel::identity(), sigma * sigma, seed};
}

Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise standard deviation must be non-negative");
  Image out = image;
  if (sigma == 0.0) return out;
  const CounterGaussian gauss(seed);
  // Pixel index is row-major so the noise field does not depend on storage order.
  for (Eigen::Index r = 0; r < out.height(); ++r) {
    for (Eigen::Index c = 0; c < out.width(); ++c) {
      out(r, c) += sigma * gauss(static_cast<std::uint64_t>(r * out.width() + c));
    }
  }
  return out;
}

Image degrade(const Image& reference, const ExperimentSpec& spec) {
  if (!(spec.noise_variance >= 0.0)) throw ArgumentError("noise variance must be non-negative");
  const Image blurred = (spec.kernel.rows() == 1 && spec.kernel.cols() == 1)
                            ? reference
                            : convolve_periodic_fft(reference, spec.kernel);
  return add_gaussian_noise(blurred, std::sqrt(spec.noise_variance), spec.seed);
}

}  // namespace pnpgmm
