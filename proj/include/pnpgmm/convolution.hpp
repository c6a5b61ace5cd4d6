#pragma once

#include <Eigen/Core>

#include "pnpgmm/image.hpp"

namespace pnpgmm {

using ComplexMatrix = Eigen::MatrixXcd;

/// Circular convolution computed directly in the spatial domain.
Image convolve_periodic(const Image& image, const BlurKernel& kernel);

/// Circular convolution computed as a pointwise product of 2-D DFTs.
Image convolve_periodic_fft(const Image& image, const BlurKernel& kernel);

/// Frequency response of the circulant operator defined by `kernel` on a
/// height x width grid. The kernel is zero-padded and circularly shifted so
/// that its centre tap lands on (0, 0); entry (0, 0) of the result is the
/// kernel sum.
ComplexMatrix transfer_function(const BlurKernel& kernel, Eigen::Index height,
                                Eigen::Index width);

/// The padded, centre-shifted kernel whose DFT is transfer_function().
Eigen::MatrixXd pad_kernel(const BlurKernel& kernel, Eigen::Index height,
                           Eigen::Index width);

/// Unnormalized forward 2-D DFT of a real or complex matrix (any size).
ComplexMatrix fft2(const ComplexMatrix& input);
ComplexMatrix fft2(const Eigen::MatrixXd& input);

/// Inverse 2-D DFT, scaled by 1/(rows*cols).
ComplexMatrix ifft2(const ComplexMatrix& input);

}  // namespace pnpgmm
