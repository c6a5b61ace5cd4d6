#include "pnpgmm/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

long parse_positive(const std::string& token, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(token, &pos);
    if (pos != token.size() || v < 1) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed PGM header in " + path.string());
  }
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string magic = header_token(in);
  if (magic != "P5" && magic != "P2") {
    throw DataError(path.string() + " is not a P5/P2 PGM file");
  }
  const long width = parse_positive(header_token(in), path);
  const long height = parse_positive(header_token(in), path);
  const long maxval = parse_positive(header_token(in), path);
  if (maxval > 255) throw DataError(path.string() + ": only 8-bit PGM is supported");

  Eigen::MatrixXd pixels(height, width);
  if (magic == "P5") {
    std::vector<unsigned char> buf(static_cast<std::size_t>(width * height));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw DataError(path.string() + ": truncated pixel data");
    }
    for (long r = 0; r < height; ++r)
      for (long c = 0; c < width; ++c) pixels(r, c) = buf[static_cast<std::size_t>(r * width + c)];
  } else {
    for (long r = 0; r < height; ++r) {
      for (long c = 0; c < width; ++c) {
        long v;
        if (!(in >> v) || v < 0 || v > maxval) {
          throw DataError(path.string() + ": malformed ASCII pixel data");
        }
        pixels(r, c) = static_cast<double>(v);
      }
    }
  }
  if (maxval != 255) pixels *= 255.0 / static_cast<double>(maxval);
  return Image(std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<unsigned char> buf(static_cast<std::size_t>(image.size()));
  for (Eigen::Index r = 0; r < image.height(); ++r) {
    for (Eigen::Index c = 0; c < image.width(); ++c) {
      // std::round rounds half away from zero.
      const double v = std::clamp(std::round(image(r, c)), 0.0, 255.0);
      buf[static_cast<std::size_t>(r * image.width() + c)] = static_cast<unsigned char>(v);
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

BlurKernel read_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1) {
    throw DataError(path.string() + ": kernel header must be 'rows cols'");
  }
  Eigen::MatrixXd taps(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!(in >> taps(r, c))) throw DataError(path.string() + ": too few kernel taps");
    }
  }
  return BlurKernel(std::move(taps));
}

void write_kernel(const std::filesystem::path& path, const BlurKernel& kernel) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << kernel.rows() << " " << kernel.cols() << "\n";
  for (Eigen::Index r = 0; r < kernel.rows(); ++r) {
    for (Eigen::Index c = 0; c < kernel.cols(); ++c) {
      out << (c ? " " : "") << kernel.taps()(r, c);
    }
    out << "\n";
  }
}

}  // namespace pnpgmm
