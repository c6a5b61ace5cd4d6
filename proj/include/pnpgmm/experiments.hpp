#pragma once

#include <cstdint>
#include <string>

#include "pnpgmm/image.hpp"

namespace pnpgmm {

struct ExperimentSpec {
  std::string name;
  BlurKernel kernel = BlurKernel::identity();
  double noise_variance = 0.0;  // intensity^2
  std::uint64_t seed = 0;
};

/// Deterministic standard normal samples addressed by (seed, index): a
/// SplitMix64-style hash of the counter feeds a Box-Muller transform, so
/// sample i does not depend on how many samples were drawn before it.
class CounterGaussian {
 public:
  explicit CounterGaussian(std::uint64_t seed) : seed_(seed) {}
  double operator()(std::uint64_t index) const;
  double uniform(std::uint64_t counter) const;  // in (0, 1)

 private:
  std::uint64_t seed_;
};

/// Blur kernel of registry experiment 1..6:
///   1, 2: 15x15, taps 1 / (1 + i^2 + j^2), i, j in [-7, 7]
///   3:    9x9 uniform
///   4:    [1 4 6 4 1]^T [1 4 6 4 1] / 256
///   5:    25x25 Gaussian, std 1.6
///   6:    25x25 Gaussian, std 0.4
BlurKernel registry_kernel(int experiment);

/// Target BSNR of experiment 3 (its noise variance depends on the image).
inline constexpr double kExperiment3Bsnr = 40.0;

/// Registry experiment with its noise variance resolved against `reference`
/// (sigma^2 = 2, 8, BSNR 40, 49, 4, 64 for experiments 1..6).
ExperimentSpec registry_experiment(int experiment, const Image& reference, std::uint64_t seed);

/// Pure denoising experiment: identity kernel, noise standard deviation sigma.
ExperimentSpec denoising_experiment(double sigma, std::uint64_t seed);

/// Periodic convolution followed by seeded i.i.d. Gaussian noise.
Image degrade(const Image& reference, const ExperimentSpec& spec);

/// Adds N(0, sigma^2) noise to every pixel.
Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed);

}  // namespace pnpgmm
