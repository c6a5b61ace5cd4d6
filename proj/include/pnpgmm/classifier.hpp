#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pnpgmm/gmm.hpp"
#include "pnpgmm/patches.hpp"

namespace pnpgmm {

struct NamedModel {
  std::string name;
  GmmModel model;
};

/// Ordered set of class priors sharing one patch size, one of which is
/// designated generic.
class ClassLibrary {
 public:
  ClassLibrary(std::vector<NamedModel> classes, std::size_t generic_index);

  std::size_t size() const { return classes_.size(); }
  const NamedModel& operator[](std::size_t c) const { return classes_[c]; }
  const std::vector<NamedModel>& classes() const { return classes_; }
  std::size_t generic_index() const { return generic_index_; }
  const GmmModel& generic() const { return classes_[generic_index_].model; }
  int patch_size() const { return classes_.front().model.patch_size(); }

  /// Copy with the generic model replaced (same name and position).
  ClassLibrary with_generic(GmmModel model) const;
  /// Copy with an extra class appended; the generic designation is kept.
  ClassLibrary with_class(std::string name, GmmModel model) const;

 private:
  std::vector<NamedModel> classes_;
  std::size_t generic_index_;
};

/// One class label per patch location, row-major over the patch grid.
struct LabelField {
  Eigen::Index grid_rows = 0;
  Eigen::Index grid_cols = 0;
  std::vector<int> labels;

  LabelField() = default;
  LabelField(Eigen::Index rows, Eigen::Index cols, int fill = 0)
      : grid_rows(rows), grid_cols(cols), labels(static_cast<std::size_t>(rows * cols), fill) {}

  Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
  int operator()(Eigen::Index r, Eigen::Index c) const {
    return labels[static_cast<std::size_t>(r * grid_cols + c)];
  }
  int& operator()(Eigen::Index r, Eigen::Index c) {
    return labels[static_cast<std::size_t>(r * grid_cols + c)];
  }
  friend bool operator==(const LabelField&, const LabelField&) = default;
};

/// costs(i, c) = -log p(patch_i | class c) under the effective noise level.
struct UnaryCosts {
  Eigen::Index grid_rows = 0;
  Eigen::Index grid_cols = 0;
  Eigen::MatrixXd costs;  // N x C

  Eigen::Index sites() const { return costs.rows(); }
  Eigen::Index classes() const { return costs.cols(); }
};

enum class ClassifyMode { none, ml, alpha };

ClassifyMode parse_classify_mode(const std::string& name);
std::string to_string(ClassifyMode mode);

UnaryCosts unary_costs(const PatchMatrix& patches, const ClassLibrary& library, double sigma);

/// Per-site argmin of the costs; ties go to the lowest class index.
LabelField ml_classify(const UnaryCosts& unary);

/// Number of 4-neighbour pairs on the grid with different labels.
long long label_disagreements(const LabelField& labels);

/// sum_i costs(i, label_i) + beta * label_disagreements(labels).
double potts_energy(const LabelField& labels, const UnaryCosts& unary, double beta);

struct ExpansionResult {
  LabelField labels;
  /// Energy of the initial labeling followed by the energy after every
  /// accepted move (strictly decreasing).
  std::vector<double> energy_trace;
  int cycles = 0;
};

/// Alpha-expansion for the Potts energy on the 4-connected patch grid. Labels
/// are visited in ascending order; each expansion is solved exactly by a
/// minimum cut and accepted only when it strictly lowers the energy. Stops
/// after a cycle with no accepted move or after `max_cycles` cycles.
ExpansionResult alpha_expansion(const UnaryCosts& unary, double beta, const LabelField& init,
                                int max_cycles = 10);

/// Labels every patch: `none` assigns the generic class, `ml` the
/// per-patch maximum-likelihood class, `alpha` the Potts MAP labeling
/// warm-started from `previous` (or from the ML labeling).
LabelField classify_patches(const PatchMatrix& patches, const ClassLibrary& library, double sigma,
                            ClassifyMode mode, double beta,
                            const std::optional<LabelField>& previous = std::nullopt,
                            int max_cycles = 10);

}  // namespace pnpgmm
