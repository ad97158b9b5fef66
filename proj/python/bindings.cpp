#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sketchmix/bounds.hpp"
#include "sketchmix/error.hpp"
#include "sketchmix/eval.hpp"
#include "sketchmix/freqdesign.hpp"
#include "sketchmix/io.hpp"
#include "sketchmix/model.hpp"
#include "sketchmix/recovery.hpp"
#include "sketchmix/sketch.hpp"

namespace py = pybind11;
using namespace sketchmix;
using namespace sketchmix::io;

namespace {

// Means and variances as K x d arrays.
RowMatrix stack(const Mixture& mix, bool means) {
  RowMatrix out(mix.size(), mix.dim());
  for (Eigen::Index k = 0; k < mix.size(); ++k)
    out.row(k) = means ? mix.components[k].mean().transpose() : mix.components[k].variances().transpose();
  return out;
}

Mixture make_mixture(const RowMatrix& means, const RowMatrix& variances, const Vector& weights) {
  if (means.rows() != variances.rows() || means.cols() != variances.cols())
    throw InvalidArgument("means and variances must have the same shape");
  std::vector<GaussianParams> comps;
  for (Eigen::Index k = 0; k < means.rows(); ++k)
    comps.emplace_back(means.row(k).transpose(), variances.row(k).transpose());
  return Mixture(std::move(comps), weights);
}

ParamDomain make_domain(std::size_t d, double sigma2_min, double sigma2_max, double mean_bound, double radius) {
  ParamDomain dom{d, sigma2_min, sigma2_max, mean_bound, radius};
  dom.validate();
  return dom;
}

py::dict bound_dict(const SketchSizeBound& b) {
  py::dict out;
  out["m"] = b.m;
  out["value"] = b.value;
  out["A"] = b.A;
  out["uses_domination"] = b.uses_domination;
  return out;
}

}  // namespace

PYBIND11_MODULE(_sketchmix, m) {
  m.doc() = "Compressive learning of diagonal Gaussian mixtures from sketches";

  auto base = py::register_exception<Error>(m, "SketchmixError");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  py::enum_<FreqKind>(m, "FreqKind")
      .value("Gaussian", FreqKind::Gaussian)
      .value("FoldedGaussianRadius", FreqKind::FoldedGaussianRadius)
      .value("AdaptedRadius", FreqKind::AdaptedRadius);

  py::enum_<Algorithm>(m, "Algorithm")
      .value("CLOMP", Algorithm::CLOMP)
      .value("CLOMPR", Algorithm::CLOMPR)
      .value("Split", Algorithm::Split);

  py::class_<Mixture>(m, "Mixture")
      .def(py::init(&make_mixture), py::arg("means"), py::arg("variances"), py::arg("weights"))
      .def_property_readonly("means", [](const Mixture& mix) { return stack(mix, true); })
      .def_property_readonly("variances", [](const Mixture& mix) { return stack(mix, false); })
      .def_property_readonly("weights", [](const Mixture& mix) { return mix.weights; })
      .def_property_readonly("K", &Mixture::size)
      .def_property_readonly("dim", &Mixture::dim)
      .def("normalized", &Mixture::normalized)
      .def("logpdf", [](const Mixture& mix, const RowMatrix& x) {
        Vector out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = mixture_logpdf(mix, x.row(i).transpose());
        return out;
      })
      .def("to_text", &gmm_to_text)
      .def_static("from_text", &gmm_from_text)
      .def("__repr__", [](const Mixture& mix) {
        return "<Mixture K=" + std::to_string(mix.size()) + " d=" + std::to_string(mix.dim()) + ">";
      });

  py::class_<FrequencySet>(m, "FrequencySet")
      .def(py::init<RowMatrix, FreqKind, double, std::uint64_t>(), py::arg("freqs"),
           py::arg("kind") = FreqKind::AdaptedRadius, py::arg("sigma2_bar") = 1.0, py::arg("seed") = 0)
      .def_readonly("freqs", &FrequencySet::freqs)
      .def_readonly("kind", &FrequencySet::kind)
      .def_readonly("sigma2_bar", &FrequencySet::sigma2_bar)
      .def_readonly("seed", &FrequencySet::seed)
      .def_readonly("fingerprint", &FrequencySet::fingerprint)
      .def_property_readonly("m", &FrequencySet::m)
      .def_property_readonly("dim", &FrequencySet::dim)
      .def("to_bytes", [](const FrequencySet& fs) { return py::bytes(freqs_to_bytes(fs)); })
      .def_static("from_bytes", [](const py::bytes& b) { return freqs_from_bytes(std::string(b)); });

  py::class_<Sketch>(m, "Sketch")
      .def_readonly("values", &Sketch::values)
      .def_readonly("count", &Sketch::count)
      .def_readonly("freq_fingerprint", &Sketch::freq_fingerprint)
      .def_readonly("analytic", &Sketch::analytic)
      .def_property_readonly("m", &Sketch::m)
      .def("to_bytes", [](const Sketch& s) { return py::bytes(sketch_to_bytes(s)); })
      .def_static("from_bytes", [](const py::bytes& b) { return sketch_from_bytes(std::string(b)); });

  m.def(
      "gen_synthetic",
      [](std::size_t d, std::size_t K, std::uint64_t seed, bool dirichlet) {
        Rng rng(seed);
        return gen_synthetic(d, K, rng, dirichlet ? WeightMode::FlatDirichlet : WeightMode::Uniform).truth;
      },
      py::arg("d"), py::arg("K"), py::arg("seed"), py::arg("dirichlet") = false);

  m.def(
      "sample",
      [](const Mixture& mix, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return mixture_sample(mix, n, rng);
      },
      py::arg("mixture"), py::arg("n"), py::arg("seed"));

  m.def(
      "estim_mean_sigma",
      [](const Dataset& data, std::uint64_t seed, std::size_t n0, std::size_t m0, std::size_t blocks,
         std::size_t iterations) {
        Rng rng(seed);
        return estim_mean_sigma(data, {n0, m0, blocks, iterations}, rng).sigma2_bar;
      },
      py::arg("data"), py::arg("seed"), py::arg("n0") = 5000, py::arg("m0") = 500, py::arg("blocks") = 30,
      py::arg("iterations") = 5);

  m.def(
      "design_frequencies",
      [](const Dataset& data, std::size_t m_freq, FreqKind kind, std::uint64_t seed) {
        Rng rng(seed);
        return design_frequencies(data, m_freq, kind, MeanSigmaOptions{}, rng);
      },
      py::arg("data"), py::arg("m"), py::arg("kind") = FreqKind::AdaptedRadius, py::arg("seed"));

  m.def(
      "draw_freq",
      [](const std::vector<Vector>& variances, const Vector& weights, std::size_t m_freq, FreqKind kind,
         std::uint64_t seed) {
        Rng rng(seed);
        return draw_freq(variances, weights, m_freq, kind, rng);
      },
      py::arg("variances"), py::arg("weights"), py::arg("m"), py::arg("kind") = FreqKind::AdaptedRadius,
      py::arg("seed"));

  m.def("sketch", &sketch_empirical, py::arg("data"), py::arg("freqs"), py::arg("chunk_size") = kDefaultChunkSize,
        py::arg("threads") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("sketch_gmm", &sketch_gmm, py::arg("mixture"), py::arg("freqs"));
  m.def("merge", &sketch_merge, py::arg("a"), py::arg("b"));

  m.def(
      "recover",
      [](const Sketch& z, const FrequencySet& fs, std::size_t K, Algorithm algo, std::uint64_t seed,
         int max_inner_iters) {
        RecoveryConfig cfg;
        cfg.K = K;
        cfg.algorithm = algo;
        cfg.seed = seed;
        cfg.max_inner_iters = max_inner_iters;
        py::gil_scoped_release release;
        return recover(z, fs, cfg);
      },
      py::arg("sketch"), py::arg("freqs"), py::arg("K"), py::arg("algorithm") = Algorithm::CLOMPR,
      py::arg("seed") = 0, py::arg("max_inner_iters") = RecoveryConfig{}.max_inner_iters);

  m.def(
      "kl_sym",
      [](const Mixture& truth, const Mixture& est, std::uint64_t seed, std::size_t n_mc) {
        Rng rng(seed);
        py::gil_scoped_release release;
        const McEstimate e = kl_sym_mc(truth, est, n_mc, rng);
        return std::make_pair(e.value, e.stderr_);
      },
      py::arg("truth"), py::arg("est"), py::arg("seed"), py::arg("n_mc") = kDefaultKlSamples);

  m.def(
      "mmd",
      [](const Mixture& p, const Mixture& q, std::uint64_t seed, double sigma2, FreqKind kind, std::size_t m_mc) {
        Rng rng(seed);
        const McEstimate e = mmd_mc(p, q, sigma2, kind, m_mc, rng);
        return std::make_pair(e.value, e.stderr_);
      },
      py::arg("p"), py::arg("q"), py::arg("seed"), py::arg("sigma2") = 1.0,
      py::arg("kind") = FreqKind::AdaptedRadius, py::arg("m_mc") = 10000);

  m.def(
      "em",
      [](const Dataset& data, std::size_t K, std::uint64_t seed, std::size_t n_init, std::size_t max_iter) {
        Rng rng(seed);
        py::gil_scoped_release release;
        return em_baseline(data, K, {n_init, max_iter, EmOptions{}.rel_tol}, rng).mixture;
      },
      py::arg("data"), py::arg("K"), py::arg("seed"), py::arg("n_init") = 10, py::arg("max_iter") = 100);

  m.def(
      "sketch_size_gmm",
      [](std::size_t d, std::size_t K, double eta, double rho, double sigma2_min, double sigma2_max,
         double mean_bound, double radius) {
        return bound_dict(
            sketch_size_gmm(make_domain(d, sigma2_min, sigma2_max, mean_bound, radius), d, K, eta, rho));
      },
      py::arg("d"), py::arg("K") = 1, py::arg("eta") = 0.5, py::arg("rho") = 0.01, py::arg("sigma2_min") = 1.0,
      py::arg("sigma2_max") = 1.0, py::arg("mean_bound") = 0.0, py::arg("radius") = 1.0);

  m.def(
      "sketch_size_single_gauss",
      [](std::size_t d, double a, double eta, double rho, double sigma2_min, double sigma2_max, double mean_bound,
         double radius) {
        return bound_dict(
            sketch_size_single_gauss(make_domain(d, sigma2_min, sigma2_max, mean_bound, radius), a, eta, rho));
      },
      py::arg("d"), py::arg("a") = 1.0, py::arg("eta") = 0.5, py::arg("rho") = 0.01, py::arg("sigma2_min") = 1.0,
      py::arg("sigma2_max") = 1.0, py::arg("mean_bound") = 0.0, py::arg("radius") = 1.0);

  m.def("read_dataset", [](const std::string& p) { return read_dataset(p); });
  m.def("write_dataset", [](const std::string& p, const Dataset& d) { write_dataset(p, d); });
  m.def("read_gmm", [](const std::string& p) { return read_gmm(p); });
  m.def("write_gmm", [](const std::string& p, const Mixture& mix) { write_gmm(p, mix); });
  m.def("read_freqs", [](const std::string& p) { return read_freqs(p); });
  m.def("write_freqs", [](const std::string& p, const FrequencySet& fs) { write_freqs(p, fs); });
  m.def("read_sketch", [](const std::string& p) { return read_sketch(p); });
  m.def("write_sketch", [](const std::string& p, const Sketch& s) { write_sketch(p, s); });
}
