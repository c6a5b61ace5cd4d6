// Python bindings. Images cross the boundary as 2-D float64 arrays on the
// [0, 255] scale; label fields as 2-D int32 arrays over the patch grid.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "pnpgmm/admm.hpp"
#include "pnpgmm/bundle.hpp"
#include "pnpgmm/convolution.hpp"
#include "pnpgmm/em.hpp"
#include "pnpgmm/errors.hpp"
#include "pnpgmm/experiments.hpp"
#include "pnpgmm/gmm_io.hpp"
#include "pnpgmm/image_io.hpp"
#include "pnpgmm/metrics.hpp"
#include "pnpgmm/patches.hpp"
#include "pnpgmm/synthetic.hpp"

namespace py = pybind11;
using namespace pnpgmm;

namespace {

using LabelArray = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Image to_image(const Eigen::MatrixXd& pixels) { return Image(pixels); }

LabelArray label_array(const LabelField& labels) {
  LabelArray out(labels.grid_rows, labels.grid_cols);
  for (Eigen::Index r = 0; r < labels.grid_rows; ++r)
    for (Eigen::Index c = 0; c < labels.grid_cols; ++c) out(r, c) = labels(r, c);
  return out;
}

LabelField label_field(const LabelArray& a) {
  LabelField f(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) f(r, c) = a(r, c);
  return f;
}

DegradationModel degradation(const std::optional<Eigen::MatrixXd>& kernel, double sigma) {
  if (!kernel) return DegradationModel::identity(sigma);
  return DegradationModel::convolution(BlurKernel(*kernel), sigma);
}

RestorationConfig make_config(int patch_size, const std::string& mode, double beta, double mu,
                              int max_iters, double rel_tol, int switch_iteration,
                              int switch_components, Eigen::Index switch_patches,
                              int switch_em_iters, std::uint64_t seed) {
  RestorationConfig rc;
  rc.patch_size = patch_size;
  rc.classify_mode = parse_classify_mode(mode);
  rc.beta = beta;
  rc.mu = mu;
  rc.max_iters = max_iters;
  rc.rel_tol = rel_tol;
  if (switch_iteration > 0)
    rc.switch_iteration = switch_iteration;
  else
    rc.switch_iteration.reset();
  rc.switch_components = switch_components;
  rc.switch_max_patches = switch_patches;
  rc.switch_em_iters = switch_em_iters;
  rc.seed = seed;
  return rc;
}

py::dict em_result_dict(const EmResult& r) {
  py::dict out;
  out["model"] = r.model;
  out["log_likelihood"] = r.log_likelihood;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  return out;
}

}  // namespace

PYBIND11_MODULE(_pnpgmm, m) {
  m.doc() = "Class-adapted Gaussian mixture priors for plug-and-play image restoration";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  m.attr("COVARIANCE_FLOOR") = kCovarianceFloor;

  // Image I/O and operators.
  m.def("read_pgm", [](const std::filesystem::path& p) { return read_pgm(p).pixels(); },
        py::arg("path"));
  m.def("write_pgm",
        [](const std::filesystem::path& p, const Eigen::MatrixXd& img) {
          write_pgm(p, to_image(img));
        },
        py::arg("path"), py::arg("image"));
  m.def("read_kernel", [](const std::filesystem::path& p) { return read_kernel(p).taps(); },
        py::arg("path"));
  m.def("convolve",
        [](const Eigen::MatrixXd& img, const Eigen::MatrixXd& kernel) {
          return convolve_periodic_fft(to_image(img), BlurKernel(kernel)).pixels();
        },
        py::arg("image"), py::arg("kernel"),
        "Periodic convolution; the kernel is normalized to unit sum.");

  m.def("extract_patches",
        [](const Eigen::MatrixXd& img, int p) { return extract_patches(to_image(img), p).data; },
        py::arg("image"), py::arg("patch_size"),
        "All stride-1 patches as columns of a (p*p, N) array, locations in row-major order.");
  m.def("aggregate_patches",
        [](const Eigen::MatrixXd& data, int p, Eigen::Index height, Eigen::Index width,
           const std::optional<Eigen::VectorXd>& weights) {
          if (p < 1 || height < p || width < p)
            throw ArgumentError("patch grid does not fit the requested image size");
          PatchMatrix pm;
          pm.patch_size = p;
          pm.grid_rows = height - p + 1;
          pm.grid_cols = width - p + 1;
          pm.data = data;
          if (pm.data.rows() != Eigen::Index(p) * p || pm.data.cols() != pm.grid_rows * pm.grid_cols)
            throw ArgumentError("patch array shape does not match the image size");
          return (weights ? aggregate_patches(pm, *weights) : aggregate_patches(pm)).pixels();
        },
        py::arg("patches"), py::arg("patch_size"), py::arg("height"), py::arg("width"),
        py::arg("weights") = std::nullopt);

  // Mixture priors.
  py::class_<GmmModel>(m, "GmmModel")
      .def(py::init<int, std::vector<double>, std::vector<Eigen::VectorXd>,
                    std::vector<Eigen::MatrixXd>, double>(),
           py::arg("patch_size"), py::arg("weights"), py::arg("means"), py::arg("covariances"),
           py::arg("covariance_floor") = kCovarianceFloor)
      .def_property_readonly("components", &GmmModel::components)
      .def_property_readonly("patch_size", &GmmModel::patch_size)
      .def_property_readonly("dim", &GmmModel::dim)
      .def_property_readonly("weights", &GmmModel::weights)
      .def_property_readonly("means",
                             [](const GmmModel& g) {
                               std::vector<Eigen::VectorXd> out;
                               for (int k = 0; k < g.components(); ++k) out.push_back(g.mean(k));
                               return out;
                             })
      .def_property_readonly("covariances",
                             [](const GmmModel& g) {
                               std::vector<Eigen::MatrixXd> out;
                               for (int k = 0; k < g.components(); ++k)
                                 out.push_back(g.covariance(k));
                               return out;
                             })
      .def("log_likelihood",
           [](const GmmModel& g, const Eigen::MatrixXd& samples, double sigma) {
             return class_log_likelihoods(g, samples, sigma);
           },
           py::arg("samples"), py::arg("sigma") = 0.0,
           "Per-column log density of the mixture under additive noise sigma.")
      .def("posteriors",
           [](const GmmModel& g, const Eigen::MatrixXd& samples, double sigma) {
             Eigen::MatrixXd w = weighted_component_log_densities(g, samples, sigma);
             normalize_log_columns(w);
             return w;
           },
           py::arg("samples"), py::arg("sigma") = 0.0)
      .def("denoise",
           [](const GmmModel& g, const Eigen::MatrixXd& samples, double sigma) {
             DenoisedPatchSet out = denoise_columns(g, samples, sigma);
             return py::make_tuple(out.estimates, out.posterior_variances);
           },
           py::arg("samples"), py::arg("sigma"),
           "MMSE estimates of the columns and their posterior variances.")
      .def("save",
           [](const GmmModel& g, const std::filesystem::path& p, bool text) {
             save_model(p, g, text ? ModelFormat::text : ModelFormat::binary);
           },
           py::arg("path"), py::arg("text") = false)
      .def_static("load", &load_model, py::arg("path"))
      .def("__eq__", [](const GmmModel& a, const GmmModel& b) { return a == b; })
      .def("__repr__", [](const GmmModel& g) {
        return "GmmModel(components=" + std::to_string(g.components()) +
               ", patch_size=" + std::to_string(g.patch_size()) + ")";
      });

  m.def("em_fit",
        [](const Eigen::MatrixXd& samples, int patch_size, int components, double sigma,
           std::uint64_t seed, int max_iters, double tol, double covariance_floor) {
          EmOptions o;
          o.components = components;
          o.seed = seed;
          o.max_iters = max_iters;
          o.tol = tol;
          o.covariance_floor = covariance_floor;
          py::gil_scoped_release release;
          EmResult r = sigma > 0.0 ? em_fit_noisy(samples, patch_size, sigma, o)
                                   : em_fit_clean(samples, patch_size, o);
          py::gil_scoped_acquire acquire;
          return em_result_dict(r);
        },
        py::arg("samples"), py::arg("patch_size"), py::arg("components") = 20,
        py::arg("sigma") = 0.0, py::arg("seed") = 0, py::arg("max_iters") = 100,
        py::arg("tol") = 1e-6, py::arg("covariance_floor") = kCovarianceFloor,
        "Fits a mixture to patch columns; sigma > 0 treats them as noisy observations.");

  py::class_<ClassLibrary>(m, "ClassLibrary")
      .def(py::init([](const std::vector<std::pair<std::string, GmmModel>>& classes,
                       std::size_t generic_index) {
             std::vector<NamedModel> named;
             for (const auto& [name, model] : classes) named.push_back({name, model});
             return ClassLibrary(std::move(named), generic_index);
           }),
           py::arg("classes"), py::arg("generic_index"))
      .def_static("load", &load_library, py::arg("manifest"))
      .def("save", [](const ClassLibrary& lib, const std::filesystem::path& dir) {
             return save_library(dir, lib);
           },
           py::arg("directory"), "Writes one model per class plus library.txt.")
      .def_property_readonly("names", &class_names)
      .def_property_readonly("generic_index", &ClassLibrary::generic_index)
      .def_property_readonly("patch_size", &ClassLibrary::patch_size)
      .def("__len__", &ClassLibrary::size)
      .def("__getitem__", [](const ClassLibrary& lib, std::size_t c) {
        if (c >= lib.size()) throw py::index_error();
        return lib[c].model;
      });

  m.def("classify",
        [](const Eigen::MatrixXd& img, const ClassLibrary& lib, double sigma,
           const std::string& mode, double beta) {
          const PatchMatrix patches = extract_patches(to_image(img), lib.patch_size());
          return label_array(
              classify_patches(patches, lib, sigma, parse_classify_mode(mode), beta));
        },
        py::arg("image"), py::arg("library"), py::arg("sigma"), py::arg("mode") = "alpha",
        py::arg("beta") = 2.0, "Class label of every patch location (none, ml or alpha).");

  // Restoration.
  m.def("denoise",
        [](const Eigen::MatrixXd& img, const ClassLibrary& lib, double sigma,
           const std::string& mode, double beta) {
          RestorationConfig rc;
          rc.patch_size = lib.patch_size();
          rc.classify_mode = parse_classify_mode(mode);
          rc.beta = beta;
          py::gil_scoped_release release;
          VUpdateResult out = denoise_image(to_image(img), sigma, lib, rc);
          py::gil_scoped_acquire acquire;
          return py::make_tuple(out.v.pixels(), label_array(out.labels));
        },
        py::arg("image"), py::arg("library"), py::arg("sigma"), py::arg("mode") = "none",
        py::arg("beta") = 2.0, "One-shot patch denoising; returns (image, labels).");

  m.def("restore",
        [](const Eigen::MatrixXd& y, const ClassLibrary& lib, double sigma,
           const std::optional<Eigen::MatrixXd>& kernel, const std::string& mode, double beta,
           double mu, int max_iters, double rel_tol, int switch_iteration,
           int switch_components, Eigen::Index switch_patches, int switch_em_iters,
           std::uint64_t seed) {
          const RestorationConfig rc =
              make_config(lib.patch_size(), mode, beta, mu, max_iters, rel_tol, switch_iteration,
                          switch_components, switch_patches, switch_em_iters, seed);
          const DegradationModel model = degradation(kernel, sigma);
          py::gil_scoped_release release;
          RestorationResult r = restore(to_image(y), model, lib, rc);
          py::gil_scoped_acquire acquire;
          py::list iterations;
          for (const IterationRecord& it : r.diagnostics.iterations) {
            py::dict rec;
            rec["k"] = it.k;
            rec["primal_residual"] = it.primal_residual;
            rec["relative_change"] = it.relative_change;
            rec["sigma_eff"] = it.sigma_eff;
            rec["labels_changed"] = it.labels_changed;
            iterations.append(rec);
          }
          py::dict out;
          out["image"] = r.image.pixels();
          out["labels"] = label_array(r.labels);
          out["iterations"] = iterations;
          out["converged"] = r.diagnostics.converged;
          out["switched_at"] = r.diagnostics.switched_at;
          return out;
        },
        py::arg("observed"), py::arg("library"), py::arg("sigma"),
        py::arg("kernel") = std::nullopt, py::arg("mode") = "none", py::arg("beta") = 2.0,
        py::arg("mu") = 0.05, py::arg("max_iters") = 200, py::arg("rel_tol") = 1e-4,
        py::arg("switch_iteration") = 100, py::arg("switch_components") = 20,
        py::arg("switch_patches") = 20000, py::arg("switch_em_iters") = 100,
        py::arg("seed") = 0,
        "Plug-and-play ADMM restoration; kernel=None means pure denoising. "
        "switch_iteration <= 0 disables the generic-model switch.");

  // Metrics.
  m.def("psnr",
        [](const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref, double peak) {
          return psnr(to_image(est), to_image(ref), peak);
        },
        py::arg("estimate"), py::arg("reference"), py::arg("peak") = 255.0);
  m.def("isnr",
        [](const Eigen::MatrixXd& obs, const Eigen::MatrixXd& est, const Eigen::MatrixXd& ref) {
          return isnr(to_image(obs), to_image(est), to_image(ref));
        },
        py::arg("observed"), py::arg("estimate"), py::arg("reference"));
  m.def("bsnr",
        [](const Eigen::MatrixXd& blurred, double noise_variance) {
          return bsnr(to_image(blurred), noise_variance);
        },
        py::arg("blurred_noiseless"), py::arg("noise_variance"));
  m.def("label_accuracy",
        [](const LabelArray& labels, const LabelArray& truth) {
          return label_accuracy(label_field(labels), label_field(truth));
        },
        py::arg("labels"), py::arg("truth"));

  // Synthetic data and the experiment registry.
  m.def("synth_image",
        [](const std::string& kind, Eigen::Index h, Eigen::Index w, std::uint64_t seed) {
          return synth_class_image(kind, h, w, seed).pixels();
        },
        py::arg("kind"), py::arg("height"), py::arg("width"), py::arg("seed") = 0,
        "Procedural test image of class text, smooth or grating.");
  m.def("registry_kernel", [](int e) { return registry_kernel(e).taps(); },
        py::arg("experiment"));
  m.def("registry_experiment",
        [](int e, const Eigen::MatrixXd& ref, std::uint64_t seed) {
          const ExperimentSpec spec = registry_experiment(e, to_image(ref), seed);
          return py::make_tuple(degrade(to_image(ref), spec).pixels(), spec.kernel.taps(),
                                spec.noise_variance);
        },
        py::arg("experiment"), py::arg("reference"), py::arg("seed") = 0,
        "Degrades the reference; returns (observed, kernel, noise_variance).");
  m.def("add_noise",
        [](const Eigen::MatrixXd& img, double sigma, std::uint64_t seed) {
          return add_gaussian_noise(to_image(img), sigma, seed).pixels();
        },
        py::arg("image"), py::arg("sigma"), py::arg("seed") = 0);
}
