#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghfd/array_estimator.hpp"
#include "ghfd/spectrum_io.hpp"
#include "ghfd/va_spectrum.hpp"

namespace ghfd {

// File exchange with an out-of-process denoiser.
//
// Each call creates a fresh batch directory under the work directory holding
// the condition SPEC files and a `requests.jsonl` manifest, one line per
// request in processing order:
//
//   {"id": "r0003", "kind": "doa", "condition": "r0003.cond.spec",
//    "output": "r0003.out.spec", "model_dir": "/models/doa"}
//
// Paths are relative to the batch directory. The serve command is then run
// with the batch directory; it must leave, for every request, either the
// output SPEC plus an `<output>.done` marker or an `<output>.error` marker
// whose text names the failure.
inline constexpr const char* kWorkDirEnv = "GHFD_WORK_DIR";
inline constexpr const char* kServeCommandEnv = "GHFD_DENOISER_CMD";
inline constexpr const char* kRequestManifestName = "requests.jsonl";

struct BoundaryConfig {
  std::filesystem::path work_dir;
  // Shell command; `{work_dir}` is replaced by the quoted batch directory,
  // otherwise the directory is appended as the last argument.
  std::string serve_command;
  std::filesystem::path model_dir;
  // Successful batch directories are deleted unless this is set.
  bool keep_batches = false;
};

// work_dir from GHFD_WORK_DIR (default: <tmp>/ghfd-work), serve_command from
// GHFD_DENOISER_CMD.
BoundaryConfig boundary_config_from_env(const std::filesystem::path& model_dir = {});

struct BoundaryRequest {
  std::string id;
  SpecKind kind = SpecKind::kVa;
  std::string condition;
  std::string output;
  std::string model_dir;
};

void to_json(nlohmann::json& j, const BoundaryRequest& r);
void from_json(const nlohmann::json& j, BoundaryRequest& r);

std::vector<BoundaryRequest> read_request_manifest(const std::filesystem::path& path);

class DenoiserBoundary {
 public:
  explicit DenoiserBoundary(BoundaryConfig config);

  // Sends every condition through the serve command and returns the outputs in
  // order. Each output must have the kind and shape of its condition. All
  // failures are BoundaryError.
  std::vector<SpecFile> process(const std::vector<SpecFile>& conditions);

  const BoundaryConfig& config() const { return config_; }

 private:
  BoundaryConfig config_;
};

// Routes ambiguous DoA spectra through the boundary; the results keep the
// inputs' spacing and velocity tags.
DoaDisambiguator make_doa_disambiguator(DenoiserBoundary& boundary);

std::vector<VaSpectrum> denoise_va(DenoiserBoundary& boundary,
                                   const std::vector<VaSpectrum>& spectra);

// The serve side of the protocol for one batch directory: runs `fn` on each
// pending request in manifest order and writes the output and marker. Requests
// that already carry a marker are skipped, and a failing request gets an error
// marker without stopping the batch. Returns the number processed.
using ServeFunction = std::function<SpecFile(const SpecFile& condition, const BoundaryRequest&)>;
std::size_t serve_batch(const std::filesystem::path& batch_dir, const ServeFunction& fn);

}  // namespace ghfd
