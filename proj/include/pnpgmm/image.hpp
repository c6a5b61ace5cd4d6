#pragma once

#include <Eigen/Core>

namespace pnpgmm {

/// Grayscale image on the [0, 255] intensity scale, stored as a
/// height x width matrix (row index = y, column index = x).
class Image {
 public:
  Image(Eigen::Index height, Eigen::Index width, double fill = 0.0);
  explicit Image(Eigen::MatrixXd pixels);

  Eigen::Index height() const { return pixels_.rows(); }
  Eigen::Index width() const { return pixels_.cols(); }
  Eigen::Index size() const { return pixels_.size(); }

  double operator()(Eigen::Index r, Eigen::Index c) const { return pixels_(r, c); }
  double& operator()(Eigen::Index r, Eigen::Index c) { return pixels_(r, c); }

  const Eigen::MatrixXd& pixels() const { return pixels_; }
  Eigen::MatrixXd& pixels() { return pixels_; }

  bool all_finite() const { return pixels_.allFinite(); }
  bool same_shape(const Image& other) const {
    return height() == other.height() && width() == other.width();
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_shape(b) && a.pixels_ == b.pixels_;
  }

 private:
  Eigen::MatrixXd pixels_;
};

/// Convolution kernel with odd dimensions; taps are normalized to sum to one
/// on construction. The centre tap sits at (rows/2, cols/2).
class BlurKernel {
 public:
  explicit BlurKernel(Eigen::MatrixXd taps);

  static BlurKernel identity();
  static BlurKernel box(Eigen::Index size);

  const Eigen::MatrixXd& taps() const { return taps_; }
  Eigen::Index rows() const { return taps_.rows(); }
  Eigen::Index cols() const { return taps_.cols(); }
  Eigen::Index center_row() const { return taps_.rows() / 2; }
  Eigen::Index center_col() const { return taps_.cols() / 2; }
  /// Sum of the taps before normalization.
  double normalization() const { return normalization_; }

 private:
  Eigen::MatrixXd taps_;
  double normalization_;
};

}  // namespace pnpgmm
