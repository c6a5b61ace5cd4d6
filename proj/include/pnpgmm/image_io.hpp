#pragma once

#include <filesystem>

#include "pnpgmm/image.hpp"

namespace pnpgmm {

/// Reads an 8-bit binary (P5) or ASCII (P2) PGM into [0, 255] doubles.
Image read_pgm(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM. Pixels are rounded half away from zero and
/// clamped to [0, 255].
void write_pgm(const std::filesystem::path& path, const Image& image);

/// Kernel text format: first line "rows cols", then rows*cols reals in
/// row-major order. The kernel is normalized on load.
BlurKernel read_kernel(const std::filesystem::path& path);
void write_kernel(const std::filesystem::path& path, const BlurKernel& kernel);

}  // namespace pnpgmm
