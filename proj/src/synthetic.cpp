#include "pnpgmm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {
namespace {

constexpr double kPaper = 235.0;
constexpr double kInk = 25.0;

// 5 x 7 glyph from a few random strokes on a 3 x 4 lattice of anchor points.
Eigen::MatrixXi random_glyph(std::mt19937_64& rng) {
  Eigen::MatrixXi g = Eigen::MatrixXi::Zero(7, 5);
  std::uniform_int_distribution<int> strokes(2, 4);
  std::uniform_int_distribution<int> ax(0, 2), ay(0, 3);
  const int n = strokes(rng);
  for (int s = 0; s < n; ++s) {
    const int x0 = ax(rng) * 2, y0 = ay(rng) * 2;
    int x1 = ax(rng) * 2, y1 = ay(rng) * 2;
    if (x0 == x1 && y0 == y1) x1 = 4 - x0;
    const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    for (int t = 0; t <= steps; ++t) {
      const int x = x0 + (steps ? (x1 - x0) * t / steps : 0);
      const int y = y0 + (steps ? (y1 - y0) * t / steps : 0);
      g(std::min(y, 6), std::min(x, 4)) = 1;
    }
  }
  return g;
}

}  // namespace

Image synth_text(Eigen::Index height, Eigen::Index width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(height, width, kPaper);
  std::uniform_int_distribution<int> word_len(2, 7);
  std::uniform_int_distribution<int> scale_pick(1, 2);
  std::bernoulli_distribution bold(0.3);
  const int scale = scale_pick(rng);
  const Eigen::Index cell_w = 6 * scale, cell_h = 8 * scale, line_h = 10 * scale;
  for (Eigen::Index top = 2; top + cell_h <= height; top += line_h) {
    Eigen::Index left = 2;
    while (left + cell_w <= width) {
      const int len = word_len(rng);
      for (int ch = 0; ch < len && left + cell_w <= width; ++ch, left += cell_w) {
        const Eigen::MatrixXi glyph = random_glyph(rng);
        const bool heavy = bold(rng);
        for (int gy = 0; gy < 7; ++gy) {
          for (int gx = 0; gx < 5; ++gx) {
            if (!glyph(gy, gx)) continue;
            for (int sy = 0; sy < scale; ++sy) {
              for (int sx = 0; sx < scale + (heavy ? 1 : 0); ++sx) {
                const Eigen::Index r = top + gy * scale + sy;
                const Eigen::Index c = left + gx * scale + sx;
                if (r < height && c < width) img(r, c) = kInk;
              }
            }
          }
        }
      }
      left += cell_w;  // word gap
    }
  }
  return img;
}

Image synth_smooth(Eigen::Index height, Eigen::Index width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(width));
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(height));
  std::uniform_real_distribution<double> spread(6.0, 24.0);
  std::uniform_real_distribution<double> amp(-70.0, 90.0);
  std::uniform_real_distribution<double> slope(-0.4, 0.4);
  Eigen::MatrixXd px(height, width);
  const double gx = slope(rng), gy = slope(rng);
  for (Eigen::Index r = 0; r < height; ++r)
    for (Eigen::Index c = 0; c < width; ++c) px(r, c) = 120.0 + gx * c + gy * r;
  const int blobs = static_cast<int>(std::max<Eigen::Index>(4, height * width / 900));
  for (int b = 0; b < blobs; ++b) {
    const double cx = ux(rng), cy = uy(rng), s = spread(rng), a = amp(rng);
    const double s2 = 2.0 * s * s;
    for (Eigen::Index c = 0; c < width; ++c) {
      const double dx = c - cx;
      for (Eigen::Index r = 0; r < height; ++r) {
        const double dy = r - cy;
        px(r, c) += a * std::exp(-(dx * dx + dy * dy) / s2);
      }
    }
  }
  px = px.cwiseMax(20.0).cwiseMin(230.0);
  return Image(std::move(px));
}

Image synth_grating(Eigen::Index height, Eigen::Index width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> period(5.0, 14.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const Eigen::Index tile = 32;
  Eigen::MatrixXd px(height, width);
  for (Eigen::Index tr = 0; tr < height; tr += tile) {
    for (Eigen::Index tc = 0; tc < width; tc += tile) {
      const double th = angle(rng), f = 2.0 * std::numbers::pi / period(rng), ph = phase(rng);
      const double kx = f * std::cos(th), ky = f * std::sin(th);
      for (Eigen::Index r = tr; r < std::min(height, tr + tile); ++r)
        for (Eigen::Index c = tc; c < std::min(width, tc + tile); ++c)
          px(r, c) = 128.0 + 80.0 * std::sin(kx * c + ky * r + ph);
    }
  }
  return Image(std::move(px));
}

Image synth_class_image(const std::string& kind, Eigen::Index height, Eigen::Index width,
                        std::uint64_t seed) {
  if (kind == "text") return synth_text(height, width, seed);
  if (kind == "smooth") return synth_smooth(height, width, seed);
  if (kind == "grating") return synth_grating(height, width, seed);
  throw ArgumentError("unknown synthetic class '" + kind + "' (text|smooth|grating)");
}

Composite make_composite(const std::vector<std::pair<Image, std::string>>& parts,
                         int patch_size) {
  if (parts.empty()) throw ArgumentError("composite needs at least one part");
  if (patch_size < 1) throw ArgumentError("patch size must be positive");
  const Eigen::Index height = parts.front().first.height();
  Eigen::Index width = 0;
  for (const auto& [img, name] : parts) {
    if (img.height() != height) throw ArgumentError("composite parts must share one height");
    width += img.width();
  }
  if (patch_size > height || patch_size > width) {
    throw ArgumentError("patch size exceeds composite size");
  }

  Composite out{Image(height, width), LabelField(), {}};
  std::vector<int> column_class(static_cast<std::size_t>(width));
  Eigen::Index at = 0;
  for (const auto& [img, name] : parts) {
    auto it = std::find(out.class_names.begin(), out.class_names.end(), name);
    const int cls = static_cast<int>(it - out.class_names.begin());
    if (it == out.class_names.end()) out.class_names.push_back(name);
    out.image.pixels().middleCols(at, img.width()) = img.pixels();
    for (Eigen::Index c = 0; c < img.width(); ++c) column_class[static_cast<std::size_t>(at + c)] = cls;
    at += img.width();
  }

  const Eigen::Index grid_rows = height - patch_size + 1;
  const Eigen::Index grid_cols = width - patch_size + 1;
  out.truth = LabelField(grid_rows, grid_cols);
  std::vector<int> votes(out.class_names.size());
  for (Eigen::Index gc = 0; gc < grid_cols; ++gc) {
    std::fill(votes.begin(), votes.end(), 0);
    for (Eigen::Index c = gc; c < gc + patch_size; ++c) ++votes[static_cast<std::size_t>(column_class[static_cast<std::size_t>(c)])];
    // Leftmost part wins ties: scan columns left to right for the first majority owner.
    int best = column_class[static_cast<std::size_t>(gc)];
    for (Eigen::Index c = gc; c < gc + patch_size; ++c) {
      const int cls = column_class[static_cast<std::size_t>(c)];
      if (votes[static_cast<std::size_t>(cls)] > votes[static_cast<std::size_t>(best)]) best = cls;
    }
    for (Eigen::Index gr = 0; gr < grid_rows; ++gr) out.truth(gr, gc) = best;
  }
  return out;
}

LabelField map_labels_to_library(const Composite& composite, const ClassLibrary& library) {
  std::vector<int> remap;
  for (const auto& name : composite.class_names) {
    const auto& classes = library.classes();
    auto it = std::find_if(classes.begin(), classes.end(),
                           [&](const NamedModel& m) { return m.name == name; });
    if (it == classes.end()) throw ArgumentError("class '" + name + "' is not in the library");
    remap.push_back(static_cast<int>(it - classes.begin()));
  }
  LabelField out = composite.truth;
  for (int& l : out.labels) l = remap[static_cast<std::size_t>(l)];
  return out;
}

double label_accuracy(const LabelField& labels, const LabelField& truth) {
  if (labels.grid_rows != truth.grid_rows || labels.grid_cols != truth.grid_cols) {
    throw ArgumentError("label fields differ in shape");
  }
  if (truth.labels.empty()) return 1.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) agree += labels.labels[i] == truth.labels[i];
  return static_cast<double>(agree) / static_cast<double>(truth.labels.size());
}

}  // namespace pnpgmm
