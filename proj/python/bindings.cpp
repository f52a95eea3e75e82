#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qadapt/baselines.hpp"
#include "qadapt/errors.hpp"
#include "qadapt/harness.hpp"
#include "qadapt/linalg.hpp"
#include "qadapt/process_noise.hpp"
#include "qadapt/scenario_io.hpp"

namespace py = pybind11;
using namespace qadapt;

namespace {

py::dict campaign(const std::string& scenario, const std::string& technique, int runs,
                  std::uint64_t seed, int threads) {
  const ScenarioConfig cfg = resolve_scenario(scenario);
  CampaignOptions opt;
  opt.runs = runs;
  opt.seed = seed;
  opt.threads = threads;
  CampaignResult r;
  {
    py::gil_scoped_release release;
    r = run_campaign(cfg, parse_technique(technique), opt);
  }
  py::dict value, std_error;
  for (const auto& a : r.aggregates) {
    value[py::str(a.metric)] = a.value;
    std_error[py::str(a.metric)] = a.std_error;
  }
  py::dict out;
  out["scenario"] = r.scenario;
  out["technique"] = r.technique;
  out["runs"] = r.runs_requested;
  out["diverged"] = r.diverged();
  out["nonpsd_q"] = r.nonpsd_q();
  out["value"] = value;
  out["std_error"] = std_error;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive process-noise estimation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("snc_q", &snc_q_analytic, py::arg("qtilde"), py::arg("dt"),
        "White-noise acceleration process noise, state [r; v].");
  m.def("dmc_q", &dmc_q_analytic, py::arg("qtilde"), py::arg("beta"), py::arg("dt"),
        "Gauss-Markov acceleration process noise, state [r; v; a].");
  m.def(
      "dmc_coefficients",
      [](double beta, double dt) {
        const DmcCoefficients c = dmc_coefficients(beta, dt);
        return py::dict(py::arg("c11") = c.c11, py::arg("c21") = c.c21, py::arg("c31") = c.c31,
                        py::arg("c22") = c.c22, py::arg("c32") = c.c32, py::arg("c33") = c.c33);
      },
      py::arg("beta"), py::arg("dt"));
  m.def("combine_q_sqrt", &combine_q_sqrt, py::arg("q1"), py::arg("q2"), py::arg("mu1"),
        py::arg("mu2"));
  m.def("vech", &vech);
  m.def("unvech", &unvech, py::arg("v"), py::arg("n"));

  m.def("scenario_names", &builtin_scenario_names);
  m.def(
      "scenario_json", [](const std::string& name) { return scenario_to_json(resolve_scenario(name)); },
      py::arg("name_or_path"));
  m.def("run_campaign", &campaign, py::arg("scenario"), py::arg("technique"),
        py::arg("runs") = 10, py::arg("seed") = 1, py::arg("threads") = 1,
        "Runs a Monte-Carlo campaign and returns aggregate metrics.");
}
