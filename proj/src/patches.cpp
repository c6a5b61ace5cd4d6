#include "pnpgmm/patches.hpp"

#include <cmath>
#include <string>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {

PatchMatrix extract_patches(const Image& image, int patch_size) {
  if (patch_size < 1) throw ArgumentError("patch size must be positive");
  if (patch_size > image.height() || patch_size > image.width()) {
    throw ArgumentError("patch size " + std::to_string(patch_size) + " exceeds image " +
                        std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  const Eigen::Index p = patch_size;
  PatchMatrix out;
  out.patch_size = patch_size;
  out.grid_rows = image.height() - p + 1;
  out.grid_cols = image.width() - p + 1;
  out.data.resize(p * p, out.grid_rows * out.grid_cols);

  const Eigen::MatrixXd& px = image.pixels();
  for (Eigen::Index r = 0; r < out.grid_rows; ++r) {
    for (Eigen::Index c = 0; c < out.grid_cols; ++c) {
      auto col = out.data.col(r * out.grid_cols + c);
      for (Eigen::Index dc = 0; dc < p; ++dc) {
        col.segment(dc * p, p) = px.col(c + dc).segment(r, p);
      }
    }
  }
  return out;
}

Image aggregate_patches(const PatchMatrix& patches, const Eigen::VectorXd& weights) {
  const Eigen::Index p = patches.patch_size;
  if (p < 1 || patches.dim() != p * p || patches.count() != patches.grid_rows * patches.grid_cols) {
    throw ArgumentError("inconsistent patch matrix");
  }
  if (weights.size() != patches.count()) {
    throw ArgumentError("expected " + std::to_string(patches.count()) + " weights, got " +
                        std::to_string(weights.size()));
  }
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (!std::isfinite(weights[j]) || !(weights[j] > 0.0)) {
      throw ArgumentError("patch weight " + std::to_string(j) + " is not strictly positive");
    }
  }

  // Running weighted mean; identical contributions reproduce their value exactly.
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(patches.image_height(), patches.image_width());
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
  for (Eigen::Index r = 0; r < patches.grid_rows; ++r) {
    for (Eigen::Index c = 0; c < patches.grid_cols; ++c) {
      const Eigen::Index j = r * patches.grid_cols + c;
      const double w = weights[j];
      auto col = patches.data.col(j);
      for (Eigen::Index dc = 0; dc < p; ++dc) {
        auto m = mean.col(c + dc).segment(r, p);
        auto t = total.col(c + dc).segment(r, p);
        t.array() += w;
        m.array() += (w / t.array()) * (col.segment(dc * p, p).array() - m.array());
      }
    }
  }
  return Image(std::move(mean));
}

Image aggregate_patches(const PatchMatrix& patches) {
  return aggregate_patches(patches, Eigen::VectorXd::Ones(patches.count()));
}

}  // namespace pnpgmm
