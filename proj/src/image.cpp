#include "pnpgmm/image.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {

Image::Image(Eigen::Index height, Eigen::Index width, double fill) {
  if (height < 1 || width < 1) {
    throw ArgumentError("image dimensions must be positive, got " + std::to_string(height) +
                        "x" + std::to_string(width));
  }
  if (!std::isfinite(fill)) throw ArgumentError("image fill value must be finite");
  pixels_ = Eigen::MatrixXd::Constant(height, width, fill);
}

Image::Image(Eigen::MatrixXd pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rows() < 1 || pixels_.cols() < 1) {
    throw ArgumentError("image dimensions must be positive");
  }
  if (!pixels_.allFinite()) throw DataError("image contains non-finite pixels");
}

BlurKernel::BlurKernel(Eigen::MatrixXd taps) : taps_(std::move(taps)) {
  if (taps_.rows() < 1 || taps_.cols() < 1 || taps_.rows() % 2 == 0 || taps_.cols() % 2 == 0) {
    throw ArgumentError("kernel dimensions must be odd, got " + std::to_string(taps_.rows()) +
                        "x" + std::to_string(taps_.cols()));
  }
  if (!taps_.allFinite()) throw DataError("kernel contains non-finite taps");
  normalization_ = taps_.sum();
  if (!(std::abs(normalization_) > 0.0)) throw DataError("kernel taps sum to zero");
  taps_ /= normalization_;
}

BlurKernel BlurKernel::identity() { return BlurKernel(Eigen::MatrixXd::Ones(1, 1)); }

BlurKernel BlurKernel::box(Eigen::Index size) {
  return BlurKernel(Eigen::MatrixXd::Ones(size, size));
}

}  // namespace pnpgmm
