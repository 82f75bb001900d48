#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "stargen/aggregate.hpp"
#include "stargen/json_io.hpp"
#include "stargen/proposer.hpp"

namespace py = pybind11;
using namespace stargen;
using nlohmann::json;

namespace {

// Documents cross the boundary as JSON text; the Python package decodes them.

py::dict diagnostic_dict(const Diagnostic& d) {
  py::dict out;
  out["code"] = std::string(to_string(d.code));
  out["subject"] = d.subject;
  out["where"] = d.where;
  out["message"] = d.message;
  return out;
}

std::vector<Diagnostic> manifest_diagnostics(const std::string& text) {
  try {
    return validate_manifest(parse_manifest(text));
  } catch (const ValidationError& e) {
    return e.diagnostics();
  } catch (const Error& e) {
    return {e.diagnostic()};
  }
}

std::string categorize_condition(const std::string& manifest_text, const std::string& condition_json) {
  BenchmarkManifest m = parse_manifest(manifest_text);
  Condition c = condition_from_json(json::parse(condition_json));
  const BaseTask* base = m.find_base_task(c.base_task);
  if (!base) throw Error(ErrorCode::ReferenceError, "unknown base task '" + c.base_task + "'", c.id);
  return categorize(*base, c.delta).label();
}

py::dict coverage(const std::string& manifest_text) {
  CoverageMatrix cov = coverage_matrix(parse_manifest(manifest_text));
  std::vector<std::string> cats;
  for (auto c : cov.categories_present) cats.push_back(c.label());
  py::dict out;
  out["axes"] = cov.axes_present;
  out["custom_axes"] = cov.custom_axes;
  out["categories"] = cats;
  out["summary"] = cov.summary();
  return out;
}

py::dict selfcheck() {
  RegistryReport r = registry_selfcheck();
  py::dict out;
  out["total"] = r.total;
  out["canonical"] = r.canonical;
  out["categories"] = r.categories;
  out["counts_by_label"] = r.counts_by_label;
  return out;
}

std::string report(const std::string& log_bytes, const std::string& manifest_text, const std::string& format,
                   std::optional<std::string> group) {
  std::optional<ReportGroup> g;
  if (group) {
    g = parse_group(*group);
    if (!g) throw Error(ErrorCode::UnsupportedFormat, "unknown group '" + *group + "'");
  }
  return export_report(compute_report(replay(log_bytes), parse_manifest(manifest_text)), format, g);
}

std::string propose_mock(const std::string& manifest_text, const std::string& base_task, const std::string& axis,
                         const std::string& mock_dir, unsigned count) {
  BenchmarkManifest m = parse_manifest(manifest_text);
  ProposalRequest req = make_request(m, base_task, axis);
  req.count = count;
  MockBackend backend(mock_dir);
  DraftSet d = propose(m, req, backend);
  if (d.drafts.empty() && !d.rejections.empty()) throw Error(ErrorCode::AllRejected, "every proposal was rejected");
  return drafts_json(d.drafts);
}

}  // namespace

PYBIND11_MODULE(_stargen, m) {
  m.doc() = "Native core of the stargen toolkit";
  static py::exception<Error> error(m, "StargenError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::tuple args = py::make_tuple(std::string(to_string(e.code())), std::string(e.what()));
      PyErr_SetObject(error.ptr(), args.ptr());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("canonical_manifest", [](const std::string& text) { return serialize_manifest(parse_manifest(text)); });
  m.def("manifest_hash", [](const std::string& text) { return manifest_hash(parse_manifest(text)); });
  m.def("validate_manifest", [](const std::string& text) {
    py::list out;
    for (const auto& d : manifest_diagnostics(text)) out.append(diagnostic_dict(d));
    return out;
  });
  m.def("coverage", &coverage);
  m.def("registry_selfcheck", &selfcheck);
  m.def("categorize", &categorize_condition, py::arg("manifest"), py::arg("condition"));
  m.def("replay", [](const std::string& bytes) { return replay(bytes).canonical_json(); });
  m.def("report", &report, py::arg("log"), py::arg("manifest"), py::arg("format") = "csv",
        py::arg("group") = std::nullopt);
  m.def("propose_mock", &propose_mock, py::arg("manifest"), py::arg("base_task"), py::arg("axis"),
        py::arg("mock_dir"), py::arg("count") = 3);
}
