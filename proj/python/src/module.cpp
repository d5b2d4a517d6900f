#include "rflab/app.hpp"
#include "rflab/checks.hpp"
#include "rflab/constants.hpp"
#include "rflab/error.hpp"
#include "rflab/io.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace rflab;

namespace {

CliOptions options(const std::string& config, const std::vector<std::string>& overrides,
                   std::optional<std::uint64_t> seed) {
  CliOptions o;
  o.config = config;
  o.overrides = overrides;
  o.seed = seed;
  return o;
}

}  // namespace

PYBIND11_MODULE(_rflab, m) {
  m.doc() = "Homogeneous Ricci flow laboratory (native core)";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());

  m.def(
      "flow_json",
      [](const std::string& config, const std::vector<std::string>& overrides,
         std::optional<std::uint64_t> seed) {
        const auto o = options(config, overrides, seed);
        py::gil_scoped_release release;
        return flow_json(o);
      },
      py::arg("config"), py::arg("overrides") = std::vector<std::string>{},
      py::arg("seed") = std::nullopt);

  m.def(
      "check_json",
      [](const std::string& config, const std::string& trajectory,
         const std::vector<std::string>& checks, const std::vector<std::string>& overrides) {
        auto o = options(config, overrides, std::nullopt);
        o.trajectory = trajectory;
        o.checks = checks;
        py::gil_scoped_release release;
        return check_json(o);
      },
      py::arg("config"), py::arg("trajectory"), py::arg("checks") = std::vector<std::string>{},
      py::arg("overrides") = std::vector<std::string>{});

  m.def(
      "constants_json",
      [](const std::string& config, const std::vector<std::string>& overrides) {
        return constants_json(options(config, overrides, std::nullopt));
      },
      py::arg("config"), py::arg("overrides") = std::vector<std::string>{});

  m.def(
      "solve_root",
      [](int n, double gamma, double c_n) {
        ConstantPrimitives p;
        p.c_n = c_n;
        const RootResult r = solve_c_n_gamma(p, n, gamma);
        return py::dict(py::arg("root") = r.root, py::arg("residual_rel") = r.residual_rel,
                        py::arg("bracket_hi") = r.bracket_hi,
                        py::arg("iterations") = r.iterations);
      },
      py::arg("n"), py::arg("gamma"), py::arg("c_n") = 1.0);

  m.def(
      "exact_moser_sums_json",
      [](int n, int terms) { return to_json(exact_moser_sums(n, terms)).dump(); }, py::arg("n"),
      py::arg("terms") = 32);

  m.def(
      "holder_suite_json",
      [](std::uint64_t seed, std::size_t measures) {
        py::gil_scoped_release release;
        return to_json(check_holder_suite(seed, measures)).dump();
      },
      py::arg("seed") = 20211104, py::arg("measures") = 1000);

  m.def("check_names", &suite_check_names);
}
