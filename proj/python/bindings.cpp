#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rlf/analysis.hpp"
#include "rlf/error.hpp"
#include "rlf/fields.hpp"
#include "rlf/flow.hpp"
#include "rlf/report_io.hpp"
#include "rlf/stability.hpp"

namespace py = pybind11;
using namespace rlf;

namespace {

Vec to_vec(const std::vector<double>& v) {
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) {
    throw LabError(ErrorCode::invalid_input, "points must have 1 to 3 coordinates");
  }
  Vec x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[i] = v[i];
  return x;
}

py::array_t<double> to_array(const Vec& v) {
  py::array_t<double> a(v.size());
  std::copy(v.data(), v.data() + v.size(), a.mutable_data());
  return a;
}

py::array_t<double> to_array(const Mat& m) {
  py::array_t<double> a({m.rows(), m.cols()});
  auto r = a.mutable_unchecked<2>();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
  return a;
}

py::object json_to_py(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

PerturbationSpec make_spec(const std::string& mode, double epsilon, std::uint64_t seed,
                           std::optional<std::vector<double>> direction, double bump_radius) {
  PerturbationSpec spec;
  spec.mode = parse_perturbation_mode(mode);
  spec.epsilon = epsilon;
  spec.seed = seed;
  if (direction) spec.direction = to_vec(*direction);
  spec.bump_radius = bump_radius;
  return spec;
}

GridFunction grid_from_array(std::vector<double> lower, double spacing, py::array_t<double, py::array::c_style> values) {
  const int n = static_cast<int>(lower.size());
  const py::buffer_info info = values.request();
  if (info.ndim != n && info.ndim != n + 1) {
    throw LabError(ErrorCode::invalid_input, "values must have shape counts or counts + (components,)");
  }
  std::vector<int> counts(n);
  for (int d = 0; d < n; ++d) counts[d] = static_cast<int>(info.shape[d]);
  const int dim_out = info.ndim == n ? 1 : static_cast<int>(info.shape[n]);
  const auto* data = static_cast<const double*>(info.ptr);
  return GridFunction(to_vec(lower), spacing, counts, dim_out, std::vector<double>(data, data + info.size));
}

py::array_t<double> grid_values(const GridFunction& g) {
  std::vector<py::ssize_t> shape(g.counts().begin(), g.counts().end());
  if (g.dim_out() > 1) shape.push_back(g.dim_out());
  py::array_t<double> a(shape);
  std::copy(g.values().begin(), g.values().end(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical stability experiments for regular Lagrangian flows";

  // The message starts with the error code, e.g. "unsupported-exponent: ...".
  py::register_exception<LabError>(m, "LabError", PyExc_RuntimeError);

  py::enum_<Integrator>(m, "Integrator").value("euler", Integrator::euler).value("rk4", Integrator::rk4);

  py::class_<ExperimentSettings>(m, "ExperimentSettings")
      .def(py::init<>())
      .def_readwrite("dim", &ExperimentSettings::dim)
      .def_readwrite("p", &ExperimentSettings::p)
      .def_readwrite("r", &ExperimentSettings::r)
      .def_readwrite("T", &ExperimentSettings::T)
      .def_readwrite("tau", &ExperimentSettings::tau)
      .def_readwrite("dt", &ExperimentSettings::dt)
      .def_readwrite("integrator", &ExperimentSettings::integrator)
      .def_readwrite("lattice_size", &ExperimentSettings::lattice_size)
      .def_readwrite("bin_width", &ExperimentSettings::bin_width)
      .def_readwrite("grid_spacing", &ExperimentSettings::grid_spacing)
      .def_readwrite("norm_lattice_size", &ExperimentSettings::norm_lattice_size)
      .def_readwrite("pair_count", &ExperimentSettings::pair_count)
      .def_readwrite("seed", &ExperimentSettings::seed);

  py::class_<VectorField>(m, "VectorField")
      .def_property_readonly("dim", &VectorField::dim)
      .def_property_readonly("sup_norm", &VectorField::sup_norm)
      .def_property_readonly("kind", [](const VectorField& f) { return std::string(to_string(f.kind())); })
      .def_property_readonly("id", &VectorField::id)
      .def_property_readonly("autonomous", &VectorField::autonomous)
      .def("eval", [](const VectorField& f, double t, std::vector<double> x) { return to_array(f.eval(t, to_vec(x))); })
      .def("grad", [](const VectorField& f, double t, std::vector<double> x) { return to_array(f.grad(t, to_vec(x))); });

  m.def("constant_field", [](std::vector<double> v) { return make_constant_field(to_vec(v)); }, py::arg("value"));
  m.def("rotation_field", &make_rotation_field, py::arg("cutoff_radius") = kDefaultCutoffRadius);
  m.def("contraction_field", &make_contraction_field, py::arg("dim") = 2, py::arg("rate") = 1.0,
        py::arg("cutoff_radius") = kDefaultCutoffRadius);
  m.def("shear_field", &make_shear_field, py::arg("width") = 0.5, py::arg("cutoff_radius") = kDefaultCutoffRadius);
  m.def("load_sampled_field", &load_sampled_field, py::arg("path"), py::arg("gradient_step") = py::none());
  m.def(
      "make_perturbation",
      [](const VectorField& f, const std::string& mode, double epsilon, std::uint64_t seed,
         std::optional<std::vector<double>> direction, double bump_radius) {
        return make_perturbation(f, make_spec(mode, epsilon, seed, direction, bump_radius));
      },
      py::arg("field"), py::arg("mode") = "constant-shift", py::arg("epsilon") = 0.0, py::arg("seed") = 0,
      py::arg("direction") = py::none(), py::arg("bump_radius") = 1.0);

  py::class_<FlowEnsemble>(m, "FlowEnsemble")
      .def_readonly("dim", &FlowEnsemble::dim)
      .def_readonly("field_id", &FlowEnsemble::field_id)
      .def_readonly("dt", &FlowEnsemble::dt)
      .def_property_readonly("times", [](const FlowEnsemble& e) { return py::array_t<double>(e.times.size(), e.times.data()); })
      .def_property_readonly("weights",
                             [](const FlowEnsemble& e) { return py::array_t<double>(e.weights.size(), e.weights.data()); })
      .def_property_readonly("positions", [](const FlowEnsemble& e) {
        py::array_t<double> a({static_cast<py::ssize_t>(e.time_count()), static_cast<py::ssize_t>(e.particle_count()),
                               static_cast<py::ssize_t>(e.dim)});
        std::copy(e.positions.begin(), e.positions.end(), a.mutable_data());
        return a;
      });

  m.def("integrate_ensemble", [](const VectorField& f, const ExperimentSettings& s) {
    return integrate_ensemble(f, ExperimentParams::derive(s, f.sup_norm(), f.sup_norm()));
  });
  m.def(
      "integrate_points",
      [](const VectorField& f, std::vector<std::vector<double>> points, double tau, double dt, Integrator integrator) {
        std::vector<Vec> pts;
        for (const auto& p : points) pts.push_back(to_vec(p));
        return integrate_points(f, pts, tau, dt, integrator);
      },
      py::arg("field"), py::arg("points"), py::arg("tau"), py::arg("dt") = 1e-3, py::arg("integrator") = Integrator::rk4);
  m.def("estimate_compressibility", [](const FlowEnsemble& e, double bin_width) {
    return json_to_py(to_json(estimate_compressibility(e, bin_width)));
  }, py::arg("ensemble"), py::arg("bin_width") = 0.1);
  m.def("check_trajectory_confinement", &check_trajectory_confinement);

  py::class_<GridFunction>(m, "GridFunction")
      .def(py::init(&grid_from_array), py::arg("lower"), py::arg("spacing"), py::arg("values"))
      .def_property_readonly("spacing", &GridFunction::spacing)
      .def_property_readonly("lower", [](const GridFunction& g) { return to_array(g.lower()); })
      .def_property_readonly("values", &grid_values)
      .def("interpolate", [](const GridFunction& g, std::vector<double> x, int c) { return g.interpolate(to_vec(x), c); },
           py::arg("x"), py::arg("component") = 0);

  m.def("lp_norm_weighted", [](std::vector<double> v, std::vector<double> w, double p) { return lp_norm_weighted(v, w, p); });
  m.def("local_maximal_function", py::overload_cast<const GridFunction&, double>(&local_maximal_function));
  m.def("check_maximal_lp_bound", [](const GridFunction& f, double lambda, double p, double rho) {
    return json_to_py(to_json(check_maximal_lp_bound(f, lambda, p, rho)));
  });
  m.def(
      "check_pointwise_bv",
      [](const GridFunction& u, double lambda, std::size_t pairs, std::uint64_t seed, double radius) {
        return json_to_py(to_json(check_pointwise_bv(u, lambda, pairs, seed, radius)));
      },
      py::arg("u"), py::arg("lambda_"), py::arg("pair_count"), py::arg("seed"), py::arg("radius") = 1.0);
  m.def("log_functional_g", [](const FlowEnsemble& X, const FlowEnsemble& Xt, double delta, double p, std::size_t k) {
    return log_functional_g(X, Xt, delta, p, k);
  });
  m.def("flow_lp_difference", [](const FlowEnsemble& X, const FlowEnsemble& Xt, double p, double r, std::size_t k) {
    return flow_lp_difference(X, Xt, p, r, k);
  });

  m.def("compute_delta", [](const VectorField& b, const VectorField& bt, const ExperimentSettings& s) {
    return compute_delta(b, bt, ExperimentParams::derive(s, b.sup_norm(), bt.sup_norm()));
  });
  m.def(
      "verify_main_estimate",
      [](const VectorField& b, const std::string& mode, double epsilon, std::uint64_t seed,
         std::optional<std::vector<double>> direction, const ExperimentSettings& s) {
        StabilityReport rep;
        {
          py::gil_scoped_release release;
          rep = verify_main_estimate(b, make_spec(mode, epsilon, seed, direction, 1.0), s);
        }
        return json_to_py(to_json(rep));
      },
      py::arg("field"), py::arg("mode") = "constant-shift", py::arg("epsilon") = 1e-4, py::arg("seed") = 0,
      py::arg("direction") = py::none(), py::arg("settings") = ExperimentSettings{});
  m.def(
      "sweep_epsilon",
      [](const VectorField& b, std::vector<double> eps, const std::string& mode, std::uint64_t seed,
         const ExperimentSettings& s) {
        PerturbationSpec base = make_spec(mode, 0.0, seed, std::nullopt, 1.0);
        return json_to_py(to_json(sweep_epsilon(b, base, eps, s)));
      },
      py::arg("field"), py::arg("eps_list"), py::arg("mode") = "constant-shift", py::arg("seed") = 0,
      py::arg("settings") = ExperimentSettings{});
}
