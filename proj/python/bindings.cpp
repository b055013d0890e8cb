#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ibmlab/cli.hpp"
#include "ibmlab/dynamics.hpp"
#include "ibmlab/ensembles.hpp"
#include "ibmlab/ifc.hpp"
#include "ibmlab/kernels.hpp"
#include "ibmlab/measures.hpp"
#include "ibmlab/stats.hpp"

namespace py = pybind11;
using namespace ibmlab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (n,) for 1-D, (n, 2) for planar
Configuration to_config(const Array& a) {
  if (a.ndim() == 1) return Configuration::line(std::vector<double>(a.data(), a.data() + a.size()));
  if (a.ndim() == 2 && a.shape(1) == 2) return Configuration(2, std::vector<double>(a.data(), a.data() + a.size()));
  throw DomainError("positions must have shape (n,) or (n, 2)");
}

Array from_config(const Configuration& c) {
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(c.size())};
  if (c.dim() == 2) shape.push_back(2);
  Array out(shape);
  std::copy(c.coords().begin(), c.coords().end(), out.mutable_data());
  return out;
}

ensembles::EnsembleSpec ensemble(const std::string& family, int n, double beta, double a, std::uint64_t seed) {
  ensembles::EnsembleSpec s{ensembles::ensemble_family_from_string(family), n, beta, a, seed};
  s.validate();
  return s;
}

dynamics::DriftModel model(const std::string& family, double beta, double r, double a, double confinement) {
  dynamics::DriftModel m{dynamics::drift_family_from_string(family), beta, r, a, confinement};
  m.validate();
  return m;
}

kernels::KernelSpec kernel_spec(const std::string& family, double bessel_a) {
  kernels::KernelSpec k{kernels::kernel_family_from_string(family), bessel_a};
  k.validate();
  return k;
}

std::vector<Configuration> to_configs(const std::vector<Array>& samples) {
  std::vector<Configuration> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(to_config(s));
  return out;
}

}  // namespace

PYBIND11_MODULE(_ibmlab, m) {
  m.doc() = "Interacting Brownian motions with logarithmic interaction: samplers, dynamics, kernels, statistics";
  m.attr("__version__") = cli::kVersion;

  // later registrations are tried first, so the base class goes first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<CollisionError>(m, "CollisionError", PyExc_RuntimeError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

  // kernels
  m.def(
      "airy",
      [](double x) {
        const auto v = kernels::airy_fn(x);
        return py::make_tuple(v.ai, v.ai_prime, v.underflow);
      },
      py::arg("x"), "Ai(x), Ai'(x) and the underflow flag.");
  m.def(
      "kernel",
      [](const std::string& family, double s, double x, double t, double y, double bessel_a) {
        return kernels::eval_kernel(kernel_spec(family, bessel_a), s, x, t, y);
      },
      py::arg("family"), py::arg("s"), py::arg("x"), py::arg("t"), py::arg("y"), py::arg("bessel_a") = 1.0);
  m.def("ginibre_kernel", &kernels::ginibre_kernel, py::arg("z"), py::arg("w"));
  m.def(
      "gap_probability",
      [](const std::string& family, double lo, double hi, int order, double bessel_a, double tol) {
        const auto r = kernels::fredholm_det(kernel_spec(family, bessel_a), {{lo, hi}}, order,
                                             [](double) { return -1.0; }, tol);
        return py::make_tuple(r.value, r.refinement_error);
      },
      py::arg("family"), py::arg("lo"), py::arg("hi"), py::arg("order") = 20, py::arg("bessel_a") = 1.0,
      py::arg("tol") = 1e-6, "det(I - K) on [lo, hi] with the refinement error.");

  // ensembles
  m.def(
      "sample",
      [](const std::string& family, int n, double beta, double a, std::uint64_t seed, std::size_t replicas) {
        const auto spec = ensemble(family, n, beta, a, seed);
        std::vector<Configuration> s;
        {
          py::gil_scoped_release release;
          s = ensembles::sample_many(spec, replicas);
        }
        std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(replicas), n};
        if (spec.dim() == 2) shape.push_back(2);
        Array out(shape);
        double* p = out.mutable_data();
        for (const auto& c : s) p = std::copy(c.coords().begin(), c.coords().end(), p);
        return out;
      },
      py::arg("family"), py::arg("n"), py::arg("beta") = 2.0, py::arg("a") = 1.0, py::arg("seed") = 0,
      py::arg("replicas") = 1, "Replica samples, shape (replicas, n) or (replicas, n, 2).");
  m.def(
      "rescale",
      [](const Array& positions, const std::string& regime, int n, double beta) {
        return from_config(ensembles::rescale(
            to_config(positions), ensembles::ScalingMap{ensembles::scaling_regime_from_string(regime), n, beta}));
      },
      py::arg("positions"), py::arg("regime"), py::arg("n"), py::arg("beta") = 2.0);
  m.def("semicircle_cdf", &ensembles::semicircle_cdf, py::arg("x"));

  // dynamics
  m.def(
      "drift",
      [](const Array& positions, const std::string& family, double beta, double r, double a, double confinement) {
        const auto c = to_config(positions);
        const auto b = dynamics::drift_all(model(family, beta, r, a, confinement), c);
        return from_config(Configuration(c.dim(), b));
      },
      py::arg("positions"), py::arg("model") = "dyson", py::arg("beta") = 2.0,
      py::arg("r") = std::numeric_limits<double>::infinity(), py::arg("a") = 1.0, py::arg("confinement") = 0.0);
  m.def(
      "evolve",
      [](const Array& initial, const std::string& family, double beta, double r, double a, double confinement,
         double t, double dt, std::uint64_t seed, int output_every) {
        const auto mdl = model(family, beta, r, a, confinement);
        dynamics::EvolveOptions o;
        o.t_final = t;
        o.dt = dt;
        o.seed = seed;
        o.output_every = output_every;
        const auto init = to_config(initial);
        dynamics::LabeledPath p;
        {
          py::gil_scoped_release release;
          p = dynamics::evolve(init, mdl, o);
        }
        std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(p.grid_size()), static_cast<py::ssize_t>(p.n)};
        if (p.dim == 2) shape.push_back(2);
        Array pos(shape);
        std::copy(p.positions.begin(), p.positions.end(), pos.mutable_data());
        py::dict d;
        d["times"] = p.times;
        d["positions"] = pos;
        d["rejections"] = p.diagnostics.rejections;
        d["min_gap"] = p.diagnostics.min_gap;
        d["violations"] = dynamics::count_invariant_violations(p, mdl);
        return d;
      },
      py::arg("initial"), py::arg("model") = "dyson", py::arg("beta") = 2.0,
      py::arg("r") = std::numeric_limits<double>::infinity(), py::arg("a") = 1.0, py::arg("confinement") = 0.0,
      py::arg("t") = 0.1, py::arg("dt") = 1e-3, py::arg("seed") = 0, py::arg("output_every") = 1);
  m.def(
      "ifc_check",
      [](const Array& initial, const std::vector<std::size_t>& ms, const std::string& family, double beta, double r,
         double a, double confinement, double t, double dt, std::uint64_t seed, double epsilon) {
        const auto mdl = model(family, beta, r, a, confinement);
        dynamics::EvolveOptions o;
        o.t_final = t;
        o.dt = dt;
        o.seed = seed;
        o.record_noise = true;
        const auto ref = dynamics::evolve(to_config(initial), mdl, o);
        py::list rows;
        for (const auto& row : ifc::consistency_report(ref, mdl, ms, epsilon)) {
          py::dict d;
          d["m"] = row.m;
          d["max_dev"] = row.max_dev;
          d["perturbed_dev"] = row.perturbed_dev;
          rows.append(d);
        }
        return rows;
      },
      py::arg("initial"), py::arg("ms"), py::arg("model") = "dyson", py::arg("beta") = 2.0,
      py::arg("r") = std::numeric_limits<double>::infinity(), py::arg("a") = 1.0, py::arg("confinement") = 0.0,
      py::arg("t") = 0.05, py::arg("dt") = 1e-3, py::arg("seed") = 0, py::arg("epsilon") = 1e-3);

  // measures
  m.def(
      "verify_ibp",
      [](int n, double beta, double center, double width, std::size_t replicas, std::uint64_t seed) {
        const auto spec = ensemble("gaussian", n, beta, 1.0, seed);
        measures::IbpResult r;
        {
          py::gil_scoped_release release;
          r = measures::verify_ibp(spec, measures::LogDerivativeField::for_ensemble(spec),
                                   measures::TestFunction::gaussian_bump(center, width), replicas);
        }
        py::dict d;
        d["lhs"] = r.lhs;
        d["rhs"] = r.rhs;
        d["std_error"] = r.std_error;
        d["inconclusive"] = r.inconclusive;
        return d;
      },
      py::arg("n"), py::arg("beta") = 2.0, py::arg("center") = 0.5, py::arg("width") = 0.7,
      py::arg("replicas") = 10000, py::arg("seed") = 0);

  // stats
  m.def(
      "ks_two_sample",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = stats::ks_two_sample(a, b);
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("a"), py::arg("b"));
  m.def("wigner_surmise_pdf", &stats::wigner_surmise_pdf, py::arg("s"));
  m.def("wigner_surmise_cdf", &stats::wigner_surmise_cdf, py::arg("s"));
  m.def(
      "number_variance",
      [](const std::vector<Array>& samples, const std::vector<double>& radii) {
        py::list rows;
        for (const auto& r : stats::number_variance(to_configs(samples), radii))
          rows.append(py::make_tuple(r.radius, r.mean, r.variance));
        return rows;
      },
      py::arg("samples"), py::arg("radii"), "Rows (radius, mean, variance) for planar samples of shape (n, 2).");

  // cli
  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        const auto cfg = cli::parse_config(args);
        cli::RunManifest man;
        {
          py::gil_scoped_release release;
          man = cli::run(cfg);
        }
        return man.to_json();
      },
      py::arg("args"), "Runs a subcommand (argument list without the program name); returns the manifest JSON.");
}
