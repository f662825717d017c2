#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "curvlab/cli.hpp"
#include "curvlab/errors.hpp"
#include "curvlab/exact_solutions.hpp"
#include "curvlab/radii_descent.hpp"
#include "curvlab/splitting.hpp"
#include "curvlab/warped_profiles.hpp"
#include "curvlab/weyl.hpp"

namespace py = pybind11;
using namespace curvlab;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Static metrics, Weyl solutions, warped splittings and curvature radii";

  static py::exception<Error> error(m, "CurvlabError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      py::object inst = exc(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  py::class_<ResidualReport>(m, "ResidualReport")
      .def_readonly("sup_tensor_residual", &ResidualReport::sup_tensor_residual)
      .def_readonly("sup_laplacian_residual", &ResidualReport::sup_laplacian_residual)
      .def_readonly("rms_tensor_residual", &ResidualReport::rms_tensor_residual)
      .def_readonly("rms_laplacian_residual", &ResidualReport::rms_laplacian_residual)
      .def_readonly("sample_count", &ResidualReport::sample_count);

  m.def(
      "schwarzschild_residual",
      [](double mass, double t_min, double t_max, int samples, bool analytic, double fd_step) {
        const auto grid = product_grid(Vec3(t_min, 0.4, 0.0), Vec3(t_max, 3.141592653589793 - 0.4, 0.0),
                                       {samples, samples, 1});
        return static_residual(schwarzschild(mass, analytic), grid, DiffScheme{fd_step, 2, false});
      },
      py::arg("mass") = 1.0, py::arg("t_min") = 2.5, py::arg("t_max") = 10.0, py::arg("samples") = 20,
      py::arg("analytic") = true, py::arg("fd_step") = 1e-4);
  m.def("schwarzschild_radial_distance", &schwarzschild_radial_distance, py::arg("mass"), py::arg("t"));

  m.def(
      "weyl_mass",
      [](std::vector<std::pair<double, double>> atoms, std::vector<std::tuple<double, double, double>> rods,
         std::vector<double> radii) {
        RieszMeasure mu;
        for (auto [z, w] : atoms) mu.atoms.push_back({z, w});
        for (auto [lo, hi, c] : rods) mu.rods.push_back(Rod::constant(lo, hi, c));
        mu.validate();
        return asymptotic_mass_fit(build(mu, WeylBox{}).pair, radii).m;
      },
      py::arg("atoms") = std::vector<std::pair<double, double>>{},
      py::arg("rods") = std::vector<std::tuple<double, double, double>>{},
      py::arg("radii") = std::vector<double>{20, 40, 80});
  m.def("curzon_lambda", &curzon_lambda, py::arg("mass"), py::arg("r"), py::arg("z"));

  py::class_<WarpedProfile>(m, "WarpedProfile")
      .def_readonly("kind", &WarpedProfile::kind)
      .def_readonly("closed", &WarpedProfile::closed)
      .def_readonly("period", &WarpedProfile::period)
      .def_readonly("t", &WarpedProfile::t)
      .def_readonly("f", &WarpedProfile::f)
      .def("radius", [](const WarpedProfile& p, double t) { return p.radius_at(t).v; })
      .def("scalar_curvature", [](const WarpedProfile& p, double t) { return profile_scalar_curvature(p, t); })
      .def("kernel_residual", [](const WarpedProfile& p) { return kernel_residual(p); });
  m.def("solve_bh_profile", &solve_bh_profile, py::arg("a"), py::arg("t_max"), py::arg("tol") = 1e-10);
  m.def("constant_profile", &constant_profile, py::arg("b") = 1.0, py::arg("period") = 1.0);
  m.def("cosine_profile", &cosine_profile, py::arg("b"), py::arg("eps"), py::arg("period") = 1.0);
  m.def(
      "yamabe_reduce", [](const WarpedProfile& p) { return yamabe_reduce(p, std::nullopt).conformal; },
      py::arg("profile"));

  py::class_<SplittingReport>(m, "SplittingReport")
      .def_readonly("t", &SplittingReport::t)
      .def_readonly("u", &SplittingReport::u)
      .def_readonly("f", &SplittingReport::f)
      .def_readonly("k", &SplittingReport::k)
      .def_readonly("s", &SplittingReport::s)
      .def_readonly("vol", &SplittingReport::vol)
      .def_readonly("delta", &SplittingReport::delta)
      .def_readonly("lambda_mean", &SplittingReport::lambda_mean)
      .def_readonly("residuals", &SplittingReport::residuals);
  m.def(
      "split", [](const WarpedProfile& p, int n) { return split(make_closed_metric(p, n)); }, py::arg("profile"),
      py::arg("n") = 256);

  py::class_<SymmetricSpaceModel>(m, "SymmetricSpaceModel")
      .def_readonly("kind", &SymmetricSpaceModel::kind)
      .def_readonly("x_min", &SymmetricSpaceModel::x_min)
      .def_readonly("x_max", &SymmetricSpaceModel::x_max)
      .def("coordinate_of", [](const SymmetricSpaceModel& s, double t) { return s.coordinate_of(t); });
  m.def("flat_model", &flat_model, py::arg("extent"));
  m.def("round_cylinder_model", &round_cylinder_model, py::arg("sphere_radius") = 1.0, py::arg("period") = 1.0);
  m.def("schwarzschild_model", &schwarzschild_model, py::arg("mass"), py::arg("t_max"),
        py::arg("inner_fraction") = 0.5);
  m.def("scale_model", &scale_model, py::arg("model"), py::arg("tau"));

  py::class_<RadiusConfig>(m, "RadiusConfig")
      .def(py::init([](double c_o, double mu, int grid) {
             RadiusConfig c;
             c.c_o = c_o;
             c.mu = mu;
             c.grid_x = c.grid_phi = grid;
             c.validate();
             return c;
           }),
           py::arg("c_o") = 1e-3, py::arg("mu") = 1e-2, py::arg("grid") = 512)
      .def_readonly("c_o", &RadiusConfig::c_o)
      .def_readonly("mu", &RadiusConfig::mu)
      .def_readonly("grid", &RadiusConfig::grid_x);
  py::class_<RadiusResult>(m, "RadiusResult")
      .def_readonly("value", &RadiusResult::value)
      .def_readonly("capped", &RadiusResult::capped);
  py::class_<BufferReport>(m, "BufferReport")
      .def_readonly("rho", &BufferReport::rho)
      .def_readonly("value", &BufferReport::value)
      .def_readonly("threshold", &BufferReport::threshold)
      .def_readonly("buffered", &BufferReport::buffered);
  m.def("l2_curvature_radius", &l2_curvature_radius, py::arg("model"), py::arg("x"), py::arg("config") = RadiusConfig{});
  m.def("volume_radius", py::overload_cast<const SymmetricSpaceModel&, double, const RadiusConfig&>(&volume_radius),
        py::arg("model"), py::arg("x"), py::arg("config") = RadiusConfig{});
  m.def("buffered",
        py::overload_cast<const SymmetricSpaceModel&, double, double, const RadiusConfig&>(&buffered),
        py::arg("model"), py::arg("x"), py::arg("c"), py::arg("config") = RadiusConfig{});

  py::class_<DescentPoint>(m, "DescentPoint")
      .def_readonly("step", &DescentPoint::step)
      .def_readonly("t", &DescentPoint::t)
      .def_readonly("rho", &DescentPoint::rho)
      .def_readonly("u", &DescentPoint::u)
      .def_readonly("buffered", &DescentPoint::buffered)
      .def_readonly("strongly_buffered", &DescentPoint::strongly_buffered);
  py::class_<DescentTrace>(m, "DescentTrace")
      .def_readonly("points", &DescentTrace::points)
      .def_readonly("stop_reason", &DescentTrace::stop_reason)
      .def_property_readonly("steps", &DescentTrace::steps);
  m.def(
      "descend_schwarzschild",
      [](double mass, double t_start, double c, double d, const RadiusConfig& cfg, int max_steps) {
        return descend(schwarzschild_family(mass), t_start, c, d, cfg, max_steps);
      },
      py::arg("mass"), py::arg("t_start"), py::arg("c"), py::arg("d"), py::arg("config") = RadiusConfig{},
      py::arg("max_steps") = 20);

  m.def("scenario_names", &scenario_names);
  m.def(
      "run_scenario",
      [](const std::string& name, std::map<std::string, std::string> params, unsigned seed, bool strict) {
        ScenarioConfig c;
        c.scenario = name;
        c.params = std::move(params);
        c.seed = seed;
        c.strict = strict;
        auto r = run_scenario(c);
        py::dict out;
        out["exit_code"] = r.exit_code;
        out["csv"] = r.csv;
        out["json"] = r.json;
        out["warnings"] = r.warnings;
        out["failures"] = r.failures;
        return out;
      },
      py::arg("scenario"), py::arg("params") = std::map<std::string, std::string>{}, py::arg("seed") = 0u,
      py::arg("strict") = false);
}
