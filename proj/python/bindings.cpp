#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "optsurr/analysis.hpp"
#include "optsurr/errors.hpp"
#include "optsurr/report.hpp"
#include "optsurr/simulate.hpp"

namespace py = pybind11;
using namespace optsurr;

namespace {

// Exception types owned by the module; plain handles so nothing is released after finalisation.
PyObject* input_error = nullptr;
PyObject* numeric_error = nullptr;
PyObject* infeasible_error = nullptr;

// Reports cross the boundary as JSON text and are decoded with the stdlib json module.
py::object to_python(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

AnalysisConfig config_from_kwargs(const py::dict& kw) {
  AnalysisConfig cfg;
  for (const auto& [key_obj, value] : kw) {
    const auto key = key_obj.cast<std::string>();
    if (key == "seed") cfg.seed = value.cast<std::uint64_t>();
    else if (key == "grid_points") cfg.grid_points = value.cast<std::size_t>();
    else if (key == "bandwidth") {
      cfg.bandwidth_rule = BandwidthRule::fixed;
      cfg.fixed_bandwidth = value.cast<double>();
    } else if (key == "c0") cfg.c0 = value.cast<double>();
    else if (key == "B") cfg.resample_count = value.cast<std::size_t>();
    else if (key == "K") cfg.cv_folds = value.cast<std::size_t>();
    else if (key == "trim") cfg.support_trim = value.cast<double>();
    else if (key == "n_bars") cfg.n_bars = value.cast<std::vector<std::size_t>>();
    else throw Error(ErrorCode::InvalidConfig, "unknown option '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_optsurr, m) {
  m.doc() = "Optimal surrogate transformation estimators";

  input_error = py::exception<Error>(m, "InputError", PyExc_ValueError).release().ptr();
  numeric_error = py::exception<Error>(m, "NumericError", PyExc_ArithmeticError).release().ptr();
  infeasible_error = py::exception<Error>(m, "InfeasibleError", PyExc_RuntimeError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.category()) {
        case ErrorCategory::Input: PyErr_SetString(input_error, e.what()); break;
        case ErrorCategory::Numeric: PyErr_SetString(numeric_error, e.what()); break;
        case ErrorCategory::Infeasible: PyErr_SetString(infeasible_error, e.what()); break;
      }
    }
  });

  m.def("power", &power, py::arg("effect"), py::arg("n"), py::arg("z") = 1.96);
  m.def("relative_power", &relative_power, py::arg("effect_g"), py::arg("effect_y"), py::arg("n_star"),
        py::arg("n_bar"), py::arg("z") = 1.96);
  m.def("solve_sample_size", &solve_sample_size, py::arg("effect_g"), py::arg("effect_y"), py::arg("n_bar"),
        py::arg("rho"), py::arg("z") = 1.96);

  m.def(
      "analyze",
      [](std::vector<double> y, std::vector<double> s, std::vector<int> a, bool with_comparators,
         const py::kwargs& kw) {
        const AnalysisConfig cfg = config_from_kwargs(kw);
        TrialDataset data(std::move(y), std::move(s), std::move(a));
        AnalysisReport report;
        {
          py::gil_scoped_release release;
          report = run_analysis(data, cfg, with_comparators);
        }
        return to_python(to_json(report));
      },
      py::arg("y"), py::arg("s"), py::arg("a"), py::arg("with_comparators") = false);

  m.def(
      "analyze_csv",
      [](const std::string& path, bool with_comparators, const py::kwargs& kw) {
        const AnalysisConfig cfg = config_from_kwargs(kw);
        const LoadResult loaded = load_dataset_file(path);
        return to_python(to_json(run_analysis(loaded.dataset, cfg, with_comparators, loaded.dropped_rows)));
      },
      py::arg("path"), py::arg("with_comparators") = false);

  m.def(
      "render_text",
      [](const std::vector<double>& y, const std::vector<double>& s, const std::vector<int>& a,
         const py::kwargs& kw) {
        const AnalysisConfig cfg = config_from_kwargs(kw);
        return render_text(run_analysis(TrialDataset(y, s, a), cfg));
      },
      py::arg("y"), py::arg("s"), py::arg("a"));

  m.def(
      "simulate",
      [](int setting, std::size_t n, std::uint64_t seed, double t) {
        const SimulatedData sim = generate(make_setting(setting, t), n, seed);
        const auto& d = sim.data;
        py::dict out;
        out["y"] = std::vector<double>(d.y().begin(), d.y().end());
        out["s"] = std::vector<double>(d.s().begin(), d.s().end());
        out["a"] = std::vector<int>(d.a().begin(), d.a().end());
        return out;
      },
      py::arg("setting"), py::arg("n"), py::arg("seed") = 1, py::arg("t") = 1.0);

  m.def(
      "truth",
      [](int setting, double t, std::size_t grid_points) {
        TruthOptions opt;
        opt.grid_points = grid_points;
        return to_python(to_json(analytic_truth(make_setting(setting, t), opt)));
      },
      py::arg("setting"), py::arg("t") = 1.0, py::arg("grid_points") = 20001);

  m.def("calibrate_t", [](int setting, double target) { return calibrate_t(make_setting(setting, 1.0), target); },
        py::arg("setting"), py::arg("target"));

  m.def(
      "design",
      [](const py::dict& report, std::size_t n_bar, double kappa, double alpha, std::size_t max_n) {
        const Json j = Json::parse(py::module_::import("json").attr("dumps")(report).cast<std::string>());
        const RpSurface surface = surface_from_json(j.at("cv").at("surface"));
        return to_python(to_json(design_from_surface(surface, n_bar, kappa, alpha, max_n)));
      },
      py::arg("report"), py::arg("n_bar"), py::arg("kappa"), py::arg("alpha") = 0.05, py::arg("max_n") = 1'000'000);
}
