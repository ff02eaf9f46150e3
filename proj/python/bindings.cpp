#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "porodec/config.hpp"
#include "porodec/delay.hpp"
#include "porodec/models.hpp"
#include "porodec/steppers.hpp"
#include "porodec/studies.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace porodec;

namespace {

CapturePolicy policy(std::size_t every, bool record_steps) {
  CapturePolicy p;
  p.every = every;
  p.record_steps = record_steps;
  return p;
}

}  // namespace

PYBIND11_MODULE(_porodec, m) {
  m.doc() = "Implicit and semi-explicit Euler stepping for elliptic-parabolic systems";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DivergenceDetected>(m, "DivergenceDetected", PyExc_ArithmeticError);

  py::enum_<Scheme>(m, "Scheme")
      .value("implicit", Scheme::implicit)
      .value("semi_explicit", Scheme::semi_explicit);

  py::enum_<HistoryKind>(m, "HistoryKind")
      .value("constant", HistoryKind::constant)
      .value("cubic_blend", HistoryKind::cubic_blend)
      .value("samples", HistoryKind::samples);

  py::class_<Config>(m, "Config")
      .def(py::init<>())
      .def_static("preset", &Config::preset, py::arg("name"))
      .def_static("preset_names", &Config::preset_names)
      .def_static("parse", &Config::parse, py::arg("text"), py::arg("source") = "<config>")
      .def("set", &Config::set, py::arg("key"), py::arg("value"))
      .def("apply_override", &Config::apply_override, py::arg("assignment"))
      .def("get", &Config::get, py::arg("key"))
      .def("number", &Config::number, py::arg("key"))
      .def("kind", &Config::kind)
      .def("entries", &Config::entries)
      .def("to_text", &Config::to_text);

  py::class_<TwoFieldSystem>(m, "TwoFieldSystem")
      .def_property_readonly("dim_u", &TwoFieldSystem::dim_u)
      .def_property_readonly("dim_p", &TwoFieldSystem::dim_p)
      .def_readonly("u0", &TwoFieldSystem::u0)
      .def_readonly("p0", &TwoFieldSystem::p0)
      .def("consistency_residual", &TwoFieldSystem::consistency_residual);

  py::class_<NetworkSystem>(m, "NetworkSystem")
      .def_readonly("m", &NetworkSystem::m)
      .def_property_readonly("dim_u", &NetworkSystem::dim_u)
      .def_property_readonly("dim_y", &NetworkSystem::dim_y)
      .def_property_readonly("dim_p", &NetworkSystem::dim_p)
      .def("consistency_residual", &NetworkSystem::consistency_residual);

  m.def("build_toy", [](double omega, double p0) { return build_toy(omega, p0).system; }, py::arg("omega"),
        py::arg("p0") = kToyP0);
  m.def("build_two_field", &build_two_field, py::arg("config"));
  m.def("build_network", [](const Config& c) { return build_network(c); }, py::arg("config"));

  py::class_<CouplingConstants>(m, "CouplingConstants")
      .def_readonly("c_a", &CouplingConstants::c_a)
      .def_readonly("c_c", &CouplingConstants::c_c)
      .def_readonly("C_d", &CouplingConstants::C_d)
      .def_readonly("rho", &CouplingConstants::rho)
      .def_readonly("weak_coupling", &CouplingConstants::weak_coupling)
      .def_readonly("stable", &CouplingConstants::stable);
  m.def("coupling_constants", &coupling_constants, py::arg("system"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("label", &Trajectory::label)
      .def_readonly("tau", &Trajectory::tau)
      .def_readonly("T", &Trajectory::T)
      .def_readonly("steps", &Trajectory::steps)
      .def_readonly("field_names", &Trajectory::field_names)
      .def_readonly("residual_names", &Trajectory::residual_names)
      .def_readonly("times", &Trajectory::times)
      .def_readonly("field_max", &Trajectory::field_max)
      .def_readonly("field_l2", &Trajectory::field_l2)
      .def_readonly("residuals", &Trajectory::residuals)
      .def("max_residual", &Trajectory::max_residual)
      .def("final_fields", [](const Trajectory& t) { return t.final_state().fields; })
      .def("snapshot_steps", [](const Trajectory& t) {
        std::vector<std::size_t> steps;
        for (const auto& s : t.snapshots) steps.push_back(s.step);
        return steps;
      });

  m.def(
      "integrate",
      [](const TwoFieldSystem& s, Scheme scheme, double tau, double T, std::size_t every, bool record_steps) {
        return integrate(s, scheme, tau, T, policy(every, record_steps));
      },
      py::arg("system"), py::arg("scheme"), py::arg("tau"), py::arg("T"), py::arg("every") = 0,
      py::arg("record_steps") = true);
  m.def(
      "integrate",
      [](const NetworkSystem& s, Scheme scheme, double tau, double T, std::size_t every, bool record_steps) {
        return integrate(s, scheme, tau, T, policy(every, record_steps));
      },
      py::arg("system"), py::arg("scheme"), py::arg("tau"), py::arg("T"), py::arg("every") = 0,
      py::arg("record_steps") = true);

  m.def(
      "method_of_steps",
      [](const TwoFieldSystem& s, double tau, double T, std::size_t inner_steps) {
        return method_of_steps(DelayDAE(s, tau), T, inner_steps);
      },
      py::arg("system"), py::arg("tau"), py::arg("T"), py::arg("inner_steps") = 1);

  m.def(
      "stability_test",
      [](const TwoFieldSystem& s, double tau) {
        const StabilityVerdict v = stability_test(DelayDAE(s, tau));
        return py::make_tuple(v.rho, to_string(v.classification));
      },
      py::arg("system"), py::arg("tau") = 1.0, "Returns (rho, classification).");

  m.def(
      "splicing_check",
      [](const TwoFieldSystem& s, double tau, HistoryKind kind) {
        if (kind == HistoryKind::cubic_blend) return splicing_check(DelayDAE(s, splicing_history(s, tau)));
        if (kind == HistoryKind::constant) return splicing_check(DelayDAE(s, tau));
        throw std::invalid_argument("splicing_check supports constant and cubic_blend histories");
      },
      py::arg("system"), py::arg("tau") = 1.0, py::arg("history") = HistoryKind::constant);

  m.def(
      "delay_gap",
      [](const TwoFieldSystem& s, const std::vector<double>& taus, std::size_t fine_factor, double T) {
        std::vector<py::tuple> rows;
        for (const auto& r : delay_gap_experiment(s, taus, fine_factor, T).rows) {
          rows.push_back(py::make_tuple(r.tau, r.gap, r.ratio));
        }
        return rows;
      },
      py::arg("system"), py::arg("taus"), py::arg("fine_factor"), py::arg("T"),
      "Rows of (tau, gap, ratio or None).");

  m.def(
      "coupling_sweep",
      [](const std::vector<double>& omegas, const std::vector<double>& taus, double T, unsigned threads) {
        const SweepResult r = coupling_sweep(omegas, taus, T, kToyP0, threads);
        return r.boundary;
      },
      py::arg("omegas"), py::arg("taus"), py::arg("T") = 1.0, py::arg("threads") = 0,
      "Stable/unstable boundary per tau (None when every omega fails).");

  m.def(
      "compute_eoc",
      [](const std::vector<double>& errors, const std::vector<double>& params) {
        const Eoc e = compute_eoc(errors, params);
        return py::make_tuple(e.pairwise, e.least_squares);
      },
      py::arg("errors"), py::arg("params"), "Returns (pairwise slopes, least-squares slope).");

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
