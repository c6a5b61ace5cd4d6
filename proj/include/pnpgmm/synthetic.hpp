#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pnpgmm/classifier.hpp"
#include "pnpgmm/image.hpp"

namespace pnpgmm {

/// Procedural stand-ins for real image classes.
///
/// text:    dark 1-2 px strokes of random 5x7 glyph bitmaps on a light page,
///          laid out in lines and words.
/// smooth:  sums of Gaussian blobs over a gentle gradient (face-like shading).
/// grating: patches of oriented sinusoidal gratings.
Image synth_text(Eigen::Index height, Eigen::Index width, std::uint64_t seed);
Image synth_smooth(Eigen::Index height, Eigen::Index width, std::uint64_t seed);
Image synth_grating(Eigen::Index height, Eigen::Index width, std::uint64_t seed);

/// Dispatches on "text", "smooth" or "grating".
Image synth_class_image(const std::string& kind, Eigen::Index height, Eigen::Index width,
                        std::uint64_t seed);

struct Composite {
  Image image;
  /// Ground-truth patch labels, indexing `class_names`.
  LabelField truth;
  /// Distinct class names in order of first appearance.
  std::vector<std::string> class_names;
};

/// Places the parts side by side (equal heights required). A patch straddling
/// a seam is labelled by the part owning most of its pixels; exact ties go to
/// the left part.
Composite make_composite(const std::vector<std::pair<Image, std::string>>& parts, int patch_size);

/// Re-indexes `truth` into the class order of `library` by name. Throws
/// ArgumentError when a composite class is missing from the library.
LabelField map_labels_to_library(const Composite& composite, const ClassLibrary& library);

/// Fraction of sites where the two label fields agree.
double label_accuracy(const LabelField& labels, const LabelField& truth);

}  // namespace pnpgmm
