#include "pnpgmm/convolution.hpp"

#include <fftw3.h>

#include <mutex>
#include <string>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {
namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Eigen stores matrices column-major, so a rows x cols matrix is laid out as a
// row-major cols x rows array. The 2-D DFT is separable, so planning the
// transposed shape yields the transform of the original matrix.
ComplexMatrix dft2(const ComplexMatrix& input, int sign) {
  ComplexMatrix out(input.rows(), input.cols());
  ComplexMatrix in = input;  // FFTW_ESTIMATE does not touch the input, but the API is non-const.
  auto* in_ptr = reinterpret_cast<fftw_complex*>(in.data());
  auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(input.cols()), static_cast<int>(input.rows()),
                            in_ptr, out_ptr, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

void check_fits(const BlurKernel& kernel, Eigen::Index height, Eigen::Index width) {
  if (kernel.rows() > height || kernel.cols() > width) {
    throw ArgumentError("kernel " + std::to_string(kernel.rows()) + "x" +
                        std::to_string(kernel.cols()) + " does not fit in " +
                        std::to_string(height) + "x" + std::to_string(width));
  }
}

}  // namespace

ComplexMatrix fft2(const ComplexMatrix& input) { return dft2(input, FFTW_FORWARD); }

ComplexMatrix fft2(const Eigen::MatrixXd& input) {
  return dft2(input.cast<std::complex<double>>(), FFTW_FORWARD);
}

ComplexMatrix ifft2(const ComplexMatrix& input) {
  ComplexMatrix out = dft2(input, FFTW_BACKWARD);
  out /= static_cast<double>(input.size());
  return out;
}

Image convolve_periodic(const Image& image, const BlurKernel& kernel) {
  check_fits(kernel, image.height(), image.width());
  const Eigen::Index h = image.height();
  const Eigen::Index w = image.width();
  const Eigen::Index cr = kernel.center_row();
  const Eigen::Index cc = kernel.center_col();
  const Eigen::MatrixXd& k = kernel.taps();
  const Eigen::MatrixXd& x = image.pixels();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h, w);
  // out(i, j) = sum_{a,b} k(a, b) * x(i - (a - cr), j - (b - cc)), indices mod (h, w).
  for (Eigen::Index b = 0; b < k.cols(); ++b) {
    for (Eigen::Index a = 0; a < k.rows(); ++a) {
      const double tap = k(a, b);
      if (tap == 0.0) continue;
      const Eigen::Index dr = ((cr - a) % h + h) % h;
      const Eigen::Index dc = ((cc - b) % w + w) % w;
      for (Eigen::Index j = 0; j < w; ++j) {
        const Eigen::Index sj = (j + dc) % w;
        for (Eigen::Index i = 0; i < h; ++i) {
          out(i, j) += tap * x((i + dr) % h, sj);
        }
      }
    }
  }
  return Image(std::move(out));
}

Eigen::MatrixXd pad_kernel(const BlurKernel& kernel, Eigen::Index height, Eigen::Index width) {
  check_fits(kernel, height, width);
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(height, width);
  for (Eigen::Index b = 0; b < kernel.cols(); ++b) {
    for (Eigen::Index a = 0; a < kernel.rows(); ++a) {
      const Eigen::Index r = ((a - kernel.center_row()) % height + height) % height;
      const Eigen::Index c = ((b - kernel.center_col()) % width + width) % width;
      padded(r, c) += kernel.taps()(a, b);
    }
  }
  return padded;
}

ComplexMatrix transfer_function(const BlurKernel& kernel, Eigen::Index height,
                                Eigen::Index width) {
  return fft2(pad_kernel(kernel, height, width));
}

Image convolve_periodic_fft(const Image& image, const BlurKernel& kernel) {
  const ComplexMatrix h = transfer_function(kernel, image.height(), image.width());
  const ComplexMatrix spectrum = fft2(image.pixels()).cwiseProduct(h);
  return Image(ifft2(spectrum).real());
}

}  // namespace pnpgmm
