#include "ghfd/boundary.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ghfd {
namespace {

const char* kind_key(SpecKind kind) {
  switch (kind) {
    case SpecKind::kVa: return "va";
    case SpecKind::kDoa: return "doa";
    case SpecKind::kTof: return "tof";
  }
  return "va";
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path marker(const std::filesystem::path& output, const char* suffix) {
  return std::filesystem::path(output.string() + suffix);
}

std::filesystem::path fresh_batch_dir(const std::filesystem::path& work_dir) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  std::filesystem::create_directories(work_dir, ec);
  if (ec) throw BoundaryError("cannot create work directory " + work_dir.string() + ": " + ec.message());
  for (;;) {
    const auto dir = work_dir / ("batch-" + std::to_string(::getpid()) + "-" +
                                 std::to_string(counter++));
    if (std::filesystem::create_directory(dir, ec)) return dir;
    if (ec) throw BoundaryError("cannot create batch directory " + dir.string() + ": " + ec.message());
  }
}

}  // namespace

BoundaryConfig boundary_config_from_env(const std::filesystem::path& model_dir) {
  BoundaryConfig config;
  if (const char* dir = std::getenv(kWorkDirEnv); dir && *dir) {
    config.work_dir = dir;
  } else {
    config.work_dir = std::filesystem::temp_directory_path() / "ghfd-work";
  }
  if (const char* cmd = std::getenv(kServeCommandEnv); cmd) config.serve_command = cmd;
  config.model_dir = model_dir;
  return config;
}

void to_json(nlohmann::json& j, const BoundaryRequest& r) {
  j = {{"id", r.id},
       {"kind", kind_key(r.kind)},
       {"condition", r.condition},
       {"output", r.output},
       {"model_dir", r.model_dir}};
}

void from_json(const nlohmann::json& j, BoundaryRequest& r) {
  j.at("id").get_to(r.id);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "va") {
    r.kind = SpecKind::kVa;
  } else if (kind == "doa") {
    r.kind = SpecKind::kDoa;
  } else if (kind == "tof") {
    r.kind = SpecKind::kTof;
  } else {
    throw DataError("unknown request kind '" + kind + "'");
  }
  j.at("condition").get_to(r.condition);
  j.at("output").get_to(r.output);
  r.model_dir = j.value("model_dir", std::string());
}

std::vector<BoundaryRequest> read_request_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open request manifest " + path.string());
  std::vector<BoundaryRequest> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<BoundaryRequest>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

DenoiserBoundary::DenoiserBoundary(BoundaryConfig config) : config_(std::move(config)) {
  if (config_.serve_command.empty()) {
    throw BoundaryError(std::string("no denoiser command configured; set ") + kServeCommandEnv +
                        " or run with --no-denoiser");
  }
  if (config_.work_dir.empty()) throw BoundaryError("denoiser work directory is empty");
}

std::vector<SpecFile> DenoiserBoundary::process(const std::vector<SpecFile>& conditions) {
  if (conditions.empty()) return {};
  const auto batch = fresh_batch_dir(config_.work_dir);

  std::vector<BoundaryRequest> requests;
  std::string manifest;
  try {
    for (std::size_t i = 0; i < conditions.size(); ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "r%04zu", i);
      BoundaryRequest req{id, conditions[i].kind, std::string(id) + ".cond.spec",
                          std::string(id) + ".out.spec", config_.model_dir.string()};
      write_spec(batch / req.condition, conditions[i]);
      manifest += nlohmann::json(req).dump() + "\n";
      requests.push_back(std::move(req));
    }
    atomic_write_text(batch / kRequestManifestName, manifest);
  } catch (const DataError& e) {
    throw BoundaryError(std::string("cannot stage denoiser request: ") + e.what());
  }

  std::string command = config_.serve_command;
  const std::string quoted = shell_quote(batch.string());
  if (const auto pos = command.find("{work_dir}"); pos != std::string::npos) {
    command.replace(pos, 10, quoted);
  } else {
    command += " " + quoted;
  }
  const int status = std::system(command.c_str());
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw BoundaryError("denoiser command failed (status " + std::to_string(status) +
                        "): " + command);
  }

  std::vector<SpecFile> outputs;
  outputs.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto out_path = batch / requests[i].output;
    if (std::filesystem::exists(marker(out_path, ".error"))) {
      throw BoundaryError("denoiser rejected request " + requests[i].id + ": " +
                          read_text(marker(out_path, ".error")));
    }
    if (!std::filesystem::exists(marker(out_path, ".done"))) {
      throw BoundaryError("denoiser left request " + requests[i].id + " without a marker");
    }
    SpecFile spec;
    try {
      spec = read_spec(out_path);
    } catch (const DataError& e) {
      throw BoundaryError(std::string("denoiser output unreadable: ") + e.what());
    }
    if (spec.kind != conditions[i].kind || spec.rows != conditions[i].rows ||
        spec.cols != conditions[i].cols) {
      throw BoundaryError("denoiser output " + requests[i].id +
                          " does not match the kind and shape of its condition");
    }
    outputs.push_back(std::move(spec));
  }
  if (!config_.keep_batches) {
    std::error_code ec;
    std::filesystem::remove_all(batch, ec);
  }
  return outputs;
}

DoaDisambiguator make_doa_disambiguator(DenoiserBoundary& boundary) {
  return [&boundary](const std::vector<DoaSpectrum>& ambiguous) {
    std::vector<SpecFile> conditions;
    conditions.reserve(ambiguous.size());
    for (const auto& s : ambiguous) conditions.push_back(to_spec(s));
    const auto outputs = boundary.process(conditions);
    std::vector<DoaSpectrum> clear;
    clear.reserve(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      DoaSpectrum s;
      try {
        s = doa_from_spec(outputs[i], ambiguous[i].d_over_lambda);
      } catch (const DataError& e) {
        throw BoundaryError(std::string("denoiser DoA output: ") + e.what());
      }
      s.v_hat_tag = ambiguous[i].v_hat_tag;
      clear.push_back(std::move(s));
    }
    return clear;
  };
}

std::vector<VaSpectrum> denoise_va(DenoiserBoundary& boundary,
                                   const std::vector<VaSpectrum>& spectra) {
  std::vector<SpecFile> conditions;
  conditions.reserve(spectra.size());
  for (const auto& s : spectra) conditions.push_back(to_spec(s));
  const auto outputs = boundary.process(conditions);
  std::vector<VaSpectrum> out;
  out.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    VaSpectrum s = va_from_spec(outputs[i]);
    s.axes = spectra[i].axes;
    s.source = spectra[i].source;
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t serve_batch(const std::filesystem::path& batch_dir, const ServeFunction& fn) {
  const auto requests = read_request_manifest(batch_dir / kRequestManifestName);
  std::size_t processed = 0;
  for (const auto& req : requests) {
    const auto out_path = batch_dir / req.output;
    if (std::filesystem::exists(marker(out_path, ".done")) ||
        std::filesystem::exists(marker(out_path, ".error"))) {
      continue;
    }
    try {
      const SpecFile condition = read_spec(batch_dir / req.condition);
      if (condition.kind != req.kind) {
        throw DataError(std::string("condition is ") + spec_kind_name(condition.kind) +
                        ", request says " + spec_kind_name(req.kind));
      }
      write_spec(out_path, fn(condition, req));
      atomic_write_text(marker(out_path, ".done"), "");
    } catch (const Error& e) {
      atomic_write_text(marker(out_path, ".error"), e.what());
    }
    ++processed;
  }
  return processed;
}

}  // namespace ghfd
