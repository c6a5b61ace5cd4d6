#include "pnpgmm/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "pnpgmm/errors.hpp"
#include "pnpgmm/maxflow.hpp"

namespace pnpgmm {

ClassLibrary::ClassLibrary(std::vector<NamedModel> classes, std::size_t generic_index)
    : classes_(std::move(classes)), generic_index_(generic_index) {
  if (classes_.empty()) throw ArgumentError("class library needs at least one class");
  if (generic_index_ >= classes_.size()) throw ArgumentError("generic class index out of range");
  std::set<std::string> names;
  const int p = classes_.front().model.patch_size();
  for (const auto& c : classes_) {
    if (!names.insert(c.name).second) throw ArgumentError("duplicate class name '" + c.name + "'");
    if (c.model.patch_size() != p) {
      throw ArgumentError("class '" + c.name + "' has patch size " +
                          std::to_string(c.model.patch_size()) + ", expected " +
                          std::to_string(p));
    }
  }
}

ClassLibrary ClassLibrary::with_generic(GmmModel model) const {
  std::vector<NamedModel> classes = classes_;
  classes[generic_index_].model = std::move(model);
  return ClassLibrary(std::move(classes), generic_index_);
}

ClassLibrary ClassLibrary::with_class(std::string name, GmmModel model) const {
  std::vector<NamedModel> classes = classes_;
  classes.push_back({std::move(name), std::move(model)});
  return ClassLibrary(std::move(classes), generic_index_);
}

ClassifyMode parse_classify_mode(const std::string& name) {
  if (name == "none") return ClassifyMode::none;
  if (name == "ml") return ClassifyMode::ml;
  if (name == "alpha") return ClassifyMode::alpha;
  throw ArgumentError("unknown classification mode '" + name + "' (none|ml|alpha)");
}

std::string to_string(ClassifyMode mode) {
  switch (mode) {
    case ClassifyMode::none: return "none";
    case ClassifyMode::ml: return "ml";
    case ClassifyMode::alpha: return "alpha";
  }
  return "?";
}

UnaryCosts unary_costs(const PatchMatrix& patches, const ClassLibrary& library, double sigma) {
  if (patches.patch_size != library.patch_size()) {
    throw ArgumentError("patch size " + std::to_string(patches.patch_size) +
                        " does not match library patch size " +
                        std::to_string(library.patch_size()));
  }
  UnaryCosts out;
  out.grid_rows = patches.grid_rows;
  out.grid_cols = patches.grid_cols;
  out.costs.resize(patches.count(), static_cast<Eigen::Index>(library.size()));
  for (std::size_t c = 0; c < library.size(); ++c) {
    out.costs.col(static_cast<Eigen::Index>(c)) =
        -class_log_likelihoods(library[c].model, patches.data, sigma);
  }
  return out;
}

LabelField ml_classify(const UnaryCosts& unary) {
  if (unary.classes() < 1) throw ArgumentError("need at least one class");
  LabelField out(unary.grid_rows, unary.grid_cols);
  if (out.size() != unary.sites()) throw ArgumentError("unary grid does not match site count");
  for (Eigen::Index i = 0; i < unary.sites(); ++i) {
    Eigen::Index best = 0;
    unary.costs.row(i).minCoeff(&best);  // first minimum on ties
    out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

long long label_disagreements(const LabelField& labels) {
  long long count = 0;
  for (Eigen::Index r = 0; r < labels.grid_rows; ++r) {
    for (Eigen::Index c = 0; c < labels.grid_cols; ++c) {
      if (c + 1 < labels.grid_cols && labels(r, c) != labels(r, c + 1)) ++count;
      if (r + 1 < labels.grid_rows && labels(r, c) != labels(r + 1, c)) ++count;
    }
  }
  return count;
}

namespace {

void check_labels(const LabelField& labels, const UnaryCosts& unary) {
  if (labels.grid_rows != unary.grid_rows || labels.grid_cols != unary.grid_cols ||
      labels.size() != unary.sites()) {
    throw ArgumentError("label field and unary costs differ in shape");
  }
  for (int l : labels.labels) {
    if (l < 0 || l >= unary.classes()) {
      throw ArgumentError("label " + std::to_string(l) + " out of range");
    }
  }
}

// Optimal expansion of `alpha` from `labels`: site i takes alpha when it ends
// on the sink side of the minimum cut. Sites tied between keeping and
// switching keep their label.
LabelField expand(const UnaryCosts& unary, double beta, const LabelField& labels, int alpha) {
  const Eigen::Index n = unary.sites();
  const int source = static_cast<int>(n);
  const int sink = source + 1;
  FlowNetwork net(static_cast<int>(n) + 2, source, sink);
  // Cost of x_i = 1 (take alpha) minus cost of x_i = 0 (keep).
  Eigen::VectorXd delta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    delta[i] = unary.costs(i, alpha) - unary.costs(i, labels.labels[static_cast<std::size_t>(i)]);
  }
  if (beta > 0.0) {
    auto pair_term = [&](Eigen::Index i, Eigen::Index j) {
      const int li = labels.labels[static_cast<std::size_t>(i)];
      const int lj = labels.labels[static_cast<std::size_t>(j)];
      const double e00 = li != lj ? beta : 0.0;
      const double e01 = li != alpha ? beta : 0.0;
      const double e10 = alpha != lj ? beta : 0.0;
      // E(xi, xj) = e00 + (e10 - e00) xi - e10 xj + (e01 + e10 - e00) (1 - xi) xj
      delta[i] += e10 - e00;
      delta[j] -= e10;
      const double cap = e01 + e10 - e00;
      if (cap > 0.0) net.add_arc(static_cast<int>(i), static_cast<int>(j), cap);
    };
    for (Eigen::Index r = 0; r < labels.grid_rows; ++r) {
      for (Eigen::Index c = 0; c < labels.grid_cols; ++c) {
        const Eigen::Index i = r * labels.grid_cols + c;
        if (c + 1 < labels.grid_cols) pair_term(i, i + 1);
        if (r + 1 < labels.grid_rows) pair_term(i, i + labels.grid_cols);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (delta[i] > 0.0) {
      net.add_arc(source, static_cast<int>(i), delta[i]);
    } else if (delta[i] < 0.0) {
      net.add_arc(static_cast<int>(i), sink, -delta[i]);
    }
  }
  const MinCut cut = max_flow_min_cut(net);
  LabelField out = labels;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cut.sink_side[static_cast<std::size_t>(i)]) out.labels[static_cast<std::size_t>(i)] = alpha;
  }
  return out;
}

}  // namespace

double potts_energy(const LabelField& labels, const UnaryCosts& unary, double beta) {
  check_labels(labels, unary);
  double energy = 0.0;
  for (Eigen::Index i = 0; i < unary.sites(); ++i) {
    energy += unary.costs(i, labels.labels[static_cast<std::size_t>(i)]);
  }
  return energy + beta * static_cast<double>(label_disagreements(labels));
}

ExpansionResult alpha_expansion(const UnaryCosts& unary, double beta, const LabelField& init,
                                int max_cycles) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ArgumentError("Potts weight must be >= 0");
  check_labels(init, unary);
  if (!unary.costs.allFinite()) throw DataError("unary costs must be finite");
  ExpansionResult result;
  result.labels = init;
  double energy = potts_energy(init, unary, beta);
  result.energy_trace.push_back(energy);
  const int classes = static_cast<int>(unary.classes());
  while (result.cycles < max_cycles) {
    ++result.cycles;
    bool moved = false;
    for (int alpha = 0; alpha < classes; ++alpha) {
      LabelField candidate = expand(unary, beta, result.labels, alpha);
      if (candidate == result.labels) continue;
      const double e = potts_energy(candidate, unary, beta);
      if (e < energy - 1e-12 * std::max(1.0, std::abs(energy))) {
        result.labels = std::move(candidate);
        energy = e;
        result.energy_trace.push_back(e);
        moved = true;
      }
    }
    if (!moved) break;
  }
  return result;
}

LabelField classify_patches(const PatchMatrix& patches, const ClassLibrary& library, double sigma,
                            ClassifyMode mode, double beta,
                            const std::optional<LabelField>& previous, int max_cycles) {
  if (patches.patch_size != library.patch_size()) {
    throw ArgumentError("patch size " + std::to_string(patches.patch_size) +
                        " does not match library patch size " +
                        std::to_string(library.patch_size()));
  }
  if (mode == ClassifyMode::none) {
    return LabelField(patches.grid_rows, patches.grid_cols,
                      static_cast<int>(library.generic_index()));
  }
  const UnaryCosts unary = unary_costs(patches, library, sigma);
  if (mode == ClassifyMode::ml) return ml_classify(unary);
  const bool warm = previous && previous->grid_rows == patches.grid_rows &&
                    previous->grid_cols == patches.grid_cols;
  return alpha_expansion(unary, beta, warm ? *previous : ml_classify(unary), max_cycles).labels;
}

}  // namespace pnpgmm
