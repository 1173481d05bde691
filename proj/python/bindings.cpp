#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "fnls/asymptotics.hpp"
#include "fnls/pipeline.hpp"
#include "fnls/spectral_eigen.hpp"

namespace py = pybind11;
using namespace fnls;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Field& f) {
  const Grid& g = f.grid();
  std::vector<py::ssize_t> shape(g.dim(), g.points());
  Array out(shape);
  std::memcpy(out.mutable_data(), f.values().data(), f.size() * sizeof(double));
  return out;
}

Field from_numpy(const Array& a, const SpectrumCache& cache) {
  const Grid& g = cache.grid();
  if (a.ndim() != g.dim()) throw GridMismatch("array rank does not match the grid dimension");
  for (int d = 0; d < g.dim(); ++d)
    if (a.shape(d) != g.points()) throw GridMismatch("array shape does not match the grid");
  return Field(g, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict breakdown(const EnergyBreakdown& e) {
  py::dict d;
  d["kinetic"] = e.kinetic;
  d["potential"] = e.potential;
  d["interaction_raw"] = e.interaction_raw;
  d["total"] = e.total;
  return d;
}

MinimizeOptions options(int max_iters, double tol_grad, std::uint64_t seed) {
  MinimizeOptions o;
  o.max_iters = max_iters;
  o.tol_grad = tol_grad;
  o.seed = seed;
  o.validate();
  return o;
}

}  // namespace

PYBIND11_MODULE(_fnls, m) {
  m.doc() = "Fractional NLS with singular weight: spectral solvers and diagnostics";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ThresholdError>(m, "ThresholdError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<GridMismatch>(m, "GridMismatch", PyExc_ValueError);

  py::class_<SpectrumCache, std::shared_ptr<SpectrumCache>>(m, "Problem")
      .def(py::init([](int dim, double s, double b, double L, int M, const std::string& potential,
                       double c_shift) {
             ProblemParams p;
             p.dim = dim;
             p.s = s;
             p.b = b;
             p.half_width = L;
             p.points = M;
             const PotentialKind k = potential_kind_from_string(potential);
             p.potential = k == PotentialKind::ShiftedHarmonic ? PotentialSpec::shifted(c_shift)
                                                              : PotentialSpec{k, 0.0};
             return std::make_shared<SpectrumCache>(p);
           }),
           py::arg("dim") = 2, py::arg("s") = 0.75, py::arg("b") = 0.5, py::arg("L") = 16.0,
           py::arg("M") = 128, py::arg("potential") = "harmonic", py::arg("c_shift") = 0.0)
      .def_property_readonly("dim", [](const SpectrumCache& c) { return c.grid().dim(); })
      .def_property_readonly("s", &SpectrumCache::s)
      .def_property_readonly("b", &SpectrumCache::b)
      .def_property_readonly("beta_sq", &SpectrumCache::beta_sq)
      .def_property_readonly("L", [](const SpectrumCache& c) { return c.grid().half_width(); })
      .def_property_readonly("M", [](const SpectrumCache& c) { return c.grid().points(); })
      .def_property_readonly("h", [](const SpectrumCache& c) { return c.grid().spacing(); })
      .def("coordinates", [](const SpectrumCache& c) {
        std::vector<double> x(c.grid().points());
        for (int i = 0; i < c.grid().points(); ++i) x[i] = c.grid().coordinate(i);
        return x;
      })
      .def("weight", [](const SpectrumCache& c) {
        return to_numpy(Field(c.grid(), {c.weight().begin(), c.weight().end()}));
      })
      .def("gaussian", [](const SpectrumCache& c, double width) {
        return to_numpy(gaussian_field(c.grid(), width));
      }, py::arg("width") = 1.0)
      .def("random_smooth", [](const SpectrumCache& c, std::uint64_t seed) {
        return to_numpy(random_smooth_field(c.grid(), seed));
      }, py::arg("seed"));

  m.def("frac_laplacian", [](const SpectrumCache& c, const Array& u) {
    return to_numpy(frac_laplacian(from_numpy(u, c), c));
  }, py::arg("problem"), py::arg("u"));
  m.def("seminorm_sq", [](const SpectrumCache& c, const Array& u) {
    return seminorm_sq(from_numpy(u, c), c);
  }, py::arg("problem"), py::arg("u"));
  m.def("interaction", [](const SpectrumCache& c, const Array& u) {
    return interaction_integral(from_numpy(u, c), c);
  }, py::arg("problem"), py::arg("u"));
  m.def("energy", [](const SpectrumCache& c, const Array& u, double a) {
    return breakdown(energy(from_numpy(u, c), a, c));
  }, py::arg("problem"), py::arg("u"), py::arg("a"));
  m.def("gradient", [](const SpectrumCache& c, const Array& u, double a) {
    return to_numpy(gradient(from_numpy(u, c), a, c));
  }, py::arg("problem"), py::arg("u"), py::arg("a"));
  m.def("weinstein_quotient", [](const SpectrumCache& c, const Array& u) {
    return weinstein_quotient(from_numpy(u, c), c);
  }, py::arg("problem"), py::arg("u"));
  m.def("epstein_zeta", &epstein_zeta, py::arg("dim"), py::arg("s"));

  m.def("ground_state", [](const SpectrumCache& c) {
    GroundStateRun run;
    {
      py::gil_scoped_release release;
      run = compute_ground_state(c, MinimizeOptions{});
    }
    const GroundState& gs = run.gs;
    py::dict d;
    d["Q"] = to_numpy(gs.Q);
    d["a_star"] = gs.a_star;
    d["mass"] = gs.mass;
    d["kinetic"] = gs.kinetic;
    d["interaction_raw"] = gs.interaction_raw;
    d["el_residual_relative"] = gs.el_residual_relative;
    d["decay_slope"] = gs.decay.slope;
    d["iterations"] = run.weinstein.iterations;
    d["converged"] = run.weinstein.converged;
    return d;
  }, py::arg("problem"));

  m.def("minimize", [](const SpectrumCache& c, double a, std::optional<double> a_star,
                       std::optional<Array> init, int max_iters, double tol_grad) {
    const Field u0 = init ? from_numpy(*init, c) : gaussian_field(c.grid(), 1.0);
    const MinimizeOptions o = options(max_iters, tol_grad, 0);
    MinimizerResult r;
    {
      py::gil_scoped_release release;
      r = minimize_Ea(c, a, u0, o, a_star);
    }
    py::dict d;
    d["u"] = to_numpy(r.u);
    d["e_a"] = r.e_a;
    d["mu_a"] = r.mu_a;
    d["eps_a"] = r.eps_a;
    d["energy"] = breakdown(r.breakdown);
    d["el_residual"] = r.el_residual;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    return d;
  }, py::arg("problem"), py::arg("a"), py::arg("a_star") = py::none(), py::arg("init") = py::none(),
     py::arg("max_iters") = 20000, py::arg("tol_grad") = 1e-8);

  m.def("first_eigenpair", [](const SpectrumCache& c) {
    EigenResult e;
    {
      py::gil_scoped_release release;
      e = first_eigenpair(c, MinimizeOptions{});
    }
    py::dict d;
    d["mu1"] = e.mu1;
    d["mu2"] = e.mu2;
    d["phi1"] = to_numpy(e.phi1);
    d["residual"] = e.residual;
    d["converged"] = e.converged;
    return d;
  }, py::arg("problem"));

  m.def("verify_gn", [](const SpectrumCache& c, double a_star, int count, std::uint64_t seed) {
    const GnCorpusReport r = verify_gn_corpus(c, a_star, count, seed);
    py::dict d;
    d["count"] = r.count;
    d["min_quotient"] = r.min_quotient;
    d["min_margin"] = r.min_margin;
    d["violations"] = r.violations;
    d["degenerate"] = r.degenerate;
    return d;
  }, py::arg("problem"), py::arg("a_star"), py::arg("count") = 100, py::arg("seed") = 0);

  m.def("run_pipeline", [](const std::string& config_text, const std::vector<std::string>& overrides,
                           bool assert_mode) {
    const RunConfig cfg = parse_config(config_text, overrides);
    PipelineOutcome out;
    {
      py::gil_scoped_release release;
      out = run_pipeline(cfg, assert_mode);
    }
    return py::make_tuple(out.exit_code, out.directory, out.summary_json);
  }, py::arg("config_text") = "", py::arg("overrides") = std::vector<std::string>{},
     py::arg("assert_mode") = false);
}
