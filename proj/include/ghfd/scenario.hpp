#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ghfd/csi_sim.hpp"
#include "ghfd/radio.hpp"

namespace ghfd {

void to_json(nlohmann::json& j, const RadioConfig& r);
void from_json(const nlohmann::json& j, RadioConfig& r);
void to_json(nlohmann::json& j, const TargetTruth& t);
void from_json(const nlohmann::json& j, TargetTruth& t);
void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);
void to_json(nlohmann::json& j, const SubflowSpread& s);
void from_json(const nlohmann::json& j, SubflowSpread& s);
void to_json(nlohmann::json& j, const ScenarioRanges& r);
void from_json(const nlohmann::json& j, ScenarioRanges& r);

// Targets drawn by sample_subflow_scenario instead of listed explicitly.
struct SubflowSpec {
  std::vector<std::size_t> sizes;
  SubflowSpread spread;
  ScenarioRanges ranges;
  std::uint64_t seed = 1;
};

// A scenario file: a SimConfig plus the recording length. Missing keys take
// their defaults; an explicit `targets` list and a `subflows` block may not
// both be given.
//
//   {"radio": {...}, "targets": [{"velocity": 1.6, ...}], "snr_db": 10,
//    "phase_error_mode": "per_frame_uniform", "rng_seed": 3,
//    "num_frames": 800, "window_frames": 80}
struct Scenario {
  SimConfig sim;
  std::optional<SubflowSpec> subflows;
  std::size_t num_frames = 800;
  std::size_t window_frames = 80;

  // The simulator input with any subflow block expanded into targets.
  SimConfig resolved() const;
};

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

// Parses and validates; malformed files raise ConfigError.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace ghfd
