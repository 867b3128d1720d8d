#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "jackmac/csm.hpp"
#include "jackmac/datapath.hpp"
#include "jackmac/simkernel.hpp"
#include "jackmac/verify.hpp"

namespace py = pybind11;
using namespace jackmac;

// Structured results cross the boundary as JSON text; the package decodes them.
namespace {

std::vector<ScalarCode> codes(const std::vector<std::uint32_t>& bits, const FormatDescriptor& f) {
  std::vector<ScalarCode> out;
  for (auto b : bits) {
    if (b > f.code_mask()) throw py::value_error("code out of range for format");
    out.emplace_back(f, b);
  }
  return out;
}

std::string mac(const std::string& mode_name, const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& w,
                std::optional<std::uint32_t> acc, std::optional<int> ex, std::optional<int> ey) {
  const auto m = datapath::mode_by_name(mode_name);
  datapath::MacOperand xo{codes(x, m.element_format), ex}, wo{codes(w, m.element_format), ey};
  std::optional<ScalarCode> a;
  if (acc) a = ScalarCode(datapath::output_descriptor(m.output_format), *acc);
  return datapath::to_json(datapath::jack_mac(m, xo, wo, a), m).dump();
}

std::string simulate(const std::string& workload, const std::string& config) {
  const auto spec = nlohmann::json::parse(workload).get<sim::WorkloadSpec>();
  const auto cfg = config.empty() ? sim::jack_preset() : nlohmann::json::parse(config).get<sim::ArrayConfig>();
  return nlohmann::json(sim::estimate_cycles(spec, cfg)).dump();
}

}  // namespace

PYBIND11_MODULE(_jackmac, m) {
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("encode", [](double v, const std::string& fmt) { return encode(v, format_by_name(fmt)).bits; },
        py::arg("value"), py::arg("format"));
  m.def("decode", [](std::uint32_t bits, const std::string& fmt) {
    return decode(ScalarCode(format_by_name(fmt), bits)).to_double();
  }, py::arg("code"), py::arg("format"));
  m.def("mac_json", &mac, py::arg("mode"), py::arg("x"), py::arg("w"), py::arg("acc") = py::none(),
        py::arg("ex") = py::none(), py::arg("ey") = py::none());
  m.def("verify_json", [](const std::string& suite, std::int64_t trials, std::uint64_t seed) {
    return nlohmann::json(verify::run_suite(suite, trials, seed)).dump();
  }, py::arg("suite"), py::arg("trials") = 10000, py::arg("seed") = 1);
  m.def("simulate_json", &simulate, py::arg("workload"), py::arg("config") = "");
  m.def("structure_json", [](const std::string& grouping, int lanes) {
    return nlohmann::json(csm::structure_report(csm::grouping_from_string(grouping), lanes)).dump();
  }, py::arg("grouping"), py::arg("lanes"));
}
