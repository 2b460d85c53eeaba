#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghfd/array_estimator.hpp"
#include "ghfd/csi_sim.hpp"
#include "ghfd/va_spectrum.hpp"

namespace ghfd {

// SPEC container, all fields little-endian:
//
//   offset  size  field
//        0     4  magic "SPEC"
//        4     2  version (1)
//        6     1  kind: 0 = VA, 1 = DoA, 2 = ToF
//        7     4  rows
//       11     4  cols
//       15    16  row axis (min, max) as f64
//       31    16  col axis (min, max) as f64
//       47     .  rows * cols f32 magnitudes, row-major
//
// VA grids need rows >= 2 and cols >= 2; DoA and ToF are single-row.
enum class SpecKind : std::uint8_t { kVa = 0, kDoa = 1, kTof = 2 };

inline constexpr std::uint16_t kSpecVersion = 1;
inline constexpr std::size_t kSpecHeaderBytes = 47;

struct AxisRange {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const AxisRange&) const = default;
};

struct SpecFile {
  SpecKind kind = SpecKind::kVa;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  AxisRange row_axis;
  AxisRange col_axis;
  std::vector<float> payload;

  float at(std::size_t r, std::size_t c) const { return payload[r * cols + c]; }
  bool operator==(const SpecFile&) const = default;
};

const char* spec_kind_name(SpecKind kind);
// Throws DataError when the shape is not allowed for the kind.
void validate_spec_shape(SpecKind kind, std::uint32_t rows, std::uint32_t cols);

std::vector<std::uint8_t> encode_spec(const SpecFile& spec);
// `origin` names the source in error messages.
SpecFile decode_spec(const std::vector<std::uint8_t>& bytes, const std::string& origin = "SPEC");

void write_spec(const std::filesystem::path& path, const SpecFile& spec);
SpecFile read_spec(const std::filesystem::path& path);

SpecFile to_spec(const VaSpectrum& spectrum);
SpecFile to_spec(const DoaSpectrum& spectrum);
SpecFile to_spec(const TofSpectrum& spectrum);
VaSpectrum va_from_spec(const SpecFile& spec);
DoaSpectrum doa_from_spec(const SpecFile& spec, double d_over_lambda = 1.0);
TofSpectrum tof_from_spec(const SpecFile& spec);

// CSI container, little-endian:
//
//   offset  size  field
//        0     4  magic "GHFD"
//        4     2  version (1)
//        6     2  M antennas
//        8     4  K subcarriers
//       12     4  W frames
//       16     8  frame period (s) as f64
//       24     .  surveillance M x K x W complex64 (re, im f32), antenna-major
//        .     .  reference K x W complex64
//
// The header has no radio parameters; write_csi stores the SimConfig in a
// `<file>.meta.json` sidecar and read_csi restores it when present.
inline constexpr std::uint16_t kCsiVersion = 1;
inline constexpr std::size_t kCsiHeaderBytes = 24;

std::vector<std::uint8_t> encode_csi(const CsiRecording& recording);
CsiRecording decode_csi(const std::vector<std::uint8_t>& bytes, const std::string& origin = "CSI");

std::filesystem::path csi_sidecar_path(const std::filesystem::path& path);
void write_csi(const std::filesystem::path& path, const CsiRecording& recording);
// Without a sidecar the radio keeps its defaults except for M, K and the
// packet rate, which come from the header.
CsiRecording read_csi(const std::filesystem::path& path);

// One line of a pair manifest (JSON Lines). Paths are relative to the
// manifest's directory.
struct PairRecord {
  std::string noisy_path;
  std::string expert_path;
  std::size_t num_targets = 0;
  double snr_noisy_db = -10.0;
  double snr_expert_db = 10.0;
  std::uint64_t seed = 0;
  // Grid cells (row, col) of the true peaks on the expert spectrum.
  std::vector<std::array<std::uint32_t, 2>> truth_cells;
  // Kind of both spectra; defaults to VA.
  SpecKind kind = SpecKind::kVa;
};

void to_json(nlohmann::json& j, const PairRecord& r);
void from_json(const nlohmann::json& j, PairRecord& r);

inline constexpr const char* kPairManifestName = "pairs.jsonl";

// Writes `dir/pairs.jsonl` ordered by seed; every referenced file must exist.
std::filesystem::path emit_pair_manifest(const std::filesystem::path& dir,
                                         std::vector<PairRecord> pairs);
std::vector<PairRecord> read_pair_manifest(const std::filesystem::path& path);

// Writes through a temporary file in the same directory and renames it into
// place, so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void atomic_write_text(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

}  // namespace ghfd
