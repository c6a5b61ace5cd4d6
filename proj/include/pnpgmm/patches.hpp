#pragma once

#include <Eigen/Core>

#include "pnpgmm/image.hpp"

namespace pnpgmm {

/// All stride-1 p x p patches of an image, one per column.
///
/// Column j holds the patch whose top-left pixel is (j / grid_cols, j % grid_cols),
/// i.e. patch locations are in row-major order. Within a column, patch pixel
/// (dr, dc) is stored at index dr + dc * p (column-major). Model files depend
/// on this ordering.
struct PatchMatrix {
  int patch_size = 0;
  Eigen::Index grid_rows = 0;
  Eigen::Index grid_cols = 0;
  Eigen::MatrixXd data;  // d x N

  Eigen::Index dim() const { return data.rows(); }
  Eigen::Index count() const { return data.cols(); }
  Eigen::Index image_height() const { return grid_rows + patch_size - 1; }
  Eigen::Index image_width() const { return grid_cols + patch_size - 1; }
};

PatchMatrix extract_patches(const Image& image, int patch_size);

/// Weighted overlap average: every pixel becomes sum_j w_j * patch_j(pixel) /
/// sum_j w_j over the patches covering it. The accumulation order is fixed
/// (row-major over patch locations), so results are reproducible bit-for-bit.
Image aggregate_patches(const PatchMatrix& patches, const Eigen::VectorXd& weights);

/// Uniform-weight overlap average.
Image aggregate_patches(const PatchMatrix& patches);

}  // namespace pnpgmm
