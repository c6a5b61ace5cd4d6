#include "pnpgmm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {
namespace {

void check_shapes(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw ArgumentError("image shapes differ: " + std::to_string(a.height()) + "x" +
                        std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                        std::to_string(b.width()));
  }
}

}  // namespace

double psnr(const Image& estimate, const Image& reference, double peak) {
  check_shapes(estimate, reference);
  const double mse = (estimate.pixels() - reference.pixels()).squaredNorm() /
                     static_cast<double>(estimate.size());
  if (mse == 0.0) return kInfiniteDb;
  return 10.0 * std::log10(peak * peak / mse);
}

double isnr(const Image& observed, const Image& estimate, const Image& reference) {
  const double out = psnr(estimate, reference);
  const double in = psnr(observed, reference);
  if (std::isinf(out) && std::isinf(in)) return 0.0;
  return out - in;
}

double sample_variance(const Image& image) {
  const double mean = image.pixels().mean();
  return (image.pixels().array() - mean).square().sum() / static_cast<double>(image.size());
}

double bsnr(const Image& blurred_noiseless, double noise_variance) {
  if (!(noise_variance >= 0.0)) throw ArgumentError("noise variance must be non-negative");
  if (noise_variance == 0.0) return kInfiniteDb;
  return 10.0 * std::log10(sample_variance(blurred_noiseless) / noise_variance);
}

std::string format_db(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string MetricReport::to_text() const {
  std::ostringstream out;
  out << "psnr_in " << format_db(psnr_in) << "\n"
      << "psnr_out " << format_db(psnr_out) << "\n"
      << "isnr " << format_db(isnr) << "\n"
      << "bsnr " << format_db(bsnr) << "\n";
  return out.str();
}

}  // namespace pnpgmm
