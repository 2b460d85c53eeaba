// Python bindings. JSON-shaped values cross as strings; the package wrapper
// turns them into dicts.

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ghfd/array_estimator.hpp"
#include "ghfd/boundary.hpp"
#include "ghfd/csi_sim.hpp"
#include "ghfd/metrics.hpp"
#include "ghfd/pipeline.hpp"
#include "ghfd/scenario.hpp"
#include "ghfd/spectrum_io.hpp"

namespace py = pybind11;
using namespace ghfd;

namespace {

using Grid = py::array_t<float, py::array::c_style | py::array::forcecast>;
using Axis = std::pair<double, double>;

SpecKind kind_from_name(const std::string& name) {
  if (name == "va") return SpecKind::kVa;
  if (name == "doa") return SpecKind::kDoa;
  if (name == "tof") return SpecKind::kTof;
  throw ConfigError("spectrum kind must be va, doa or tof, got '" + name + "'");
}

std::string kind_to_name(SpecKind kind) {
  switch (kind) {
    case SpecKind::kVa: return "va";
    case SpecKind::kDoa: return "doa";
    case SpecKind::kTof: return "tof";
  }
  return "?";
}

SpecFile make_spec(const std::string& kind, const Grid& grid, Axis row_axis, Axis col_axis) {
  if (grid.ndim() != 2) throw DataError("spectrum grid must be two-dimensional");
  SpecFile s;
  s.kind = kind_from_name(kind);
  s.rows = static_cast<std::uint32_t>(grid.shape(0));
  s.cols = static_cast<std::uint32_t>(grid.shape(1));
  s.row_axis = {row_axis.first, row_axis.second};
  s.col_axis = {col_axis.first, col_axis.second};
  s.payload.assign(grid.data(), grid.data() + grid.size());
  validate_spec_shape(s.kind, s.rows, s.cols);
  return s;
}

py::tuple spec_tuple(const SpecFile& s) {
  Grid grid({static_cast<py::ssize_t>(s.rows), static_cast<py::ssize_t>(s.cols)});
  std::copy(s.payload.begin(), s.payload.end(), grid.mutable_data());
  return py::make_tuple(kind_to_name(s.kind), grid, Axis{s.row_axis.min, s.row_axis.max},
                        Axis{s.col_axis.min, s.col_axis.max});
}

py::tuple recording_tuple(const CsiRecording& rec) {
  const auto M = static_cast<py::ssize_t>(rec.num_antennas());
  const auto K = static_cast<py::ssize_t>(rec.num_subcarriers());
  const auto W = static_cast<py::ssize_t>(rec.num_frames());
  py::array_t<std::complex<double>> surveillance({M, K, W});
  std::copy(rec.surveillance.data().begin(), rec.surveillance.data().end(),
            surveillance.mutable_data());
  py::array_t<std::complex<double>> reference({K, W});
  auto ref = reference.mutable_unchecked<2>();
  for (py::ssize_t k = 0; k < K; ++k) {
    for (py::ssize_t w = 0; w < W; ++w) ref(k, w) = rec.reference(k, w);
  }
  return py::make_tuple(surveillance, reference, nlohmann::json(rec.config).dump(),
                        rec.frame_period_s);
}

CsiRecording simulate_scenario(const std::string& scenario_json) {
  Scenario s;
  try {
    s = nlohmann::json::parse(scenario_json).get<Scenario>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return simulate_csi(s.resolved(), s.num_frames);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "G-HFD simulation, detection and file-exchange primitives";

  auto base = py::register_exception<Error>(m, "GhfdError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<BoundaryError>(m, "BoundaryError", base.ptr());

  m.attr("WORK_DIR_ENV") = kWorkDirEnv;
  m.attr("SERVE_COMMAND_ENV") = kServeCommandEnv;
  m.attr("REQUEST_MANIFEST_NAME") = kRequestManifestName;
  m.attr("PAIR_MANIFEST_NAME") = kPairManifestName;

  m.def("encode_spec", [](const std::string& kind, const Grid& grid, Axis row_axis, Axis col_axis) {
    const auto bytes = encode_spec(make_spec(kind, grid, row_axis, col_axis));
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode_spec", [](const py::bytes& data) {
    const std::string s = data;
    return spec_tuple(decode_spec(std::vector<std::uint8_t>(s.begin(), s.end())));
  });
  m.def("write_spec", [](const std::filesystem::path& path, const std::string& kind,
                         const Grid& grid, Axis row_axis, Axis col_axis) {
    write_spec(path, make_spec(kind, grid, row_axis, col_axis));
  });
  m.def("read_spec", [](const std::filesystem::path& path) { return spec_tuple(read_spec(path)); });

  m.def("simulate", [](const std::string& scenario_json) {
    return recording_tuple(simulate_scenario(scenario_json));
  });
  m.def("simulate_to_file", [](const std::string& scenario_json, const std::filesystem::path& path) {
    write_csi(path, simulate_scenario(scenario_json));
  });
  m.def("read_csi", [](const std::filesystem::path& path) { return recording_tuple(read_csi(path)); });

  m.def("detect_file", [](const std::filesystem::path& path, std::size_t max_windows) {
    DetectOptions options;
    options.max_windows = max_windows;
    const CsiRecording rec = read_csi(path);
    py::gil_scoped_release release;
    return nlohmann::json(detect(rec, options).report).dump();
  }, py::arg("path"), py::arg("max_windows") = 10);

  m.def("read_pair_manifest", [](const std::filesystem::path& path) {
    return nlohmann::json(read_pair_manifest(path)).dump();
  });
  m.def("emit_pair_manifest", [](const std::filesystem::path& dir, const std::string& records_json) {
    std::vector<PairRecord> records;
    try {
      records = nlohmann::json::parse(records_json).get<std::vector<PairRecord>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("invalid pair records: ") + e.what());
    }
    return emit_pair_manifest(dir, std::move(records));
  });
  m.def("read_request_manifest", [](const std::filesystem::path& path) {
    return nlohmann::json(read_request_manifest(path)).dump();
  });

  m.def("serve_batch", [](const std::filesystem::path& batch_dir, const py::function& fn) {
    return serve_batch(batch_dir, [&](const SpecFile& condition, const BoundaryRequest& req) {
      py::object out;
      try {
        out = fn(spec_tuple(condition), nlohmann::json(req).dump());
      } catch (py::error_already_set& e) {
        // Ordinary exceptions mark the request failed; anything else stops the batch.
        if (!e.matches(PyExc_Exception)) throw;
        throw DataError(e.what());
      }
      const auto t = out.cast<py::tuple>();
      if (t.size() != 4) throw DataError("serve function must return (kind, grid, row_axis, col_axis)");
      return make_spec(t[0].cast<std::string>(), t[1].cast<Grid>(), t[2].cast<Axis>(),
                       t[3].cast<Axis>());
    });
  });

  m.def("evaluate_files", [](const std::filesystem::path& truth, const std::filesystem::path& reports) {
    return nlohmann::json(evaluate_files(truth, reports)).dump();
  });
  m.def("size_label", &size_label);
  m.def("alias_set", &alias_set, py::arg("theta_deg"), py::arg("d_over_lambda"));
}
