#pragma once

#include <limits>
#include <string>

#include "pnpgmm/image.hpp"

namespace pnpgmm {

inline constexpr double kInfiniteDb = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE); +inf when the images are identical.
double psnr(const Image& estimate, const Image& reference, double peak = 255.0);

/// psnr(estimate) - psnr(observed). Both infinite (observed == estimate ==
/// reference) gives 0.
double isnr(const Image& observed, const Image& estimate, const Image& reference);

/// 10 log10(var(blurred) / noise_variance), variance taken about the image
/// mean; +inf for zero noise variance.
double bsnr(const Image& blurred_noiseless, double noise_variance);

double sample_variance(const Image& image);

struct MetricReport {
  double psnr_in = 0.0;
  double psnr_out = 0.0;
  double isnr = 0.0;
  double bsnr = 0.0;

  /// "key value" lines with two decimals ("inf" for the sentinel).
  std::string to_text() const;
};

/// Two-decimal formatting used by every report ("inf"/"-inf" for sentinels).
std::string format_db(double value);

}  // namespace pnpgmm
