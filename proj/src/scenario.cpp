#include "ghfd/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

namespace ghfd {
namespace {

// JSON has no infinity; a noise-free recording is written as "inf".
nlohmann::json snr_to_json(double snr) {
  if (std::isinf(snr) && snr > 0.0) return "inf";
  return snr;
}

double snr_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("snr_db must be a number or \"inf\"");
  }
  return j.get<double>();
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void to_json(nlohmann::json& j, const RadioConfig& r) {
  j = {{"carrier_hz", r.carrier_hz},
       {"bandwidth_hz", r.bandwidth_hz},
       {"num_subcarriers", r.num_subcarriers},
       {"num_ula_antennas", r.num_ula_antennas},
       {"antenna_spacing_wavelengths", r.antenna_spacing_wavelengths},
       {"packet_rate_hz", r.packet_rate_hz}};
}

void from_json(const nlohmann::json& j, RadioConfig& r) {
  maybe(j, "carrier_hz", r.carrier_hz);
  maybe(j, "bandwidth_hz", r.bandwidth_hz);
  maybe(j, "num_subcarriers", r.num_subcarriers);
  maybe(j, "num_ula_antennas", r.num_ula_antennas);
  maybe(j, "antenna_spacing_wavelengths", r.antenna_spacing_wavelengths);
  maybe(j, "packet_rate_hz", r.packet_rate_hz);
}

void to_json(nlohmann::json& j, const TargetTruth& t) {
  j = {{"velocity", t.velocity},         {"acceleration", t.acceleration},
       {"doa_deg", t.doa_deg},           {"tof_s", t.tof_s},
       {"reflection_gain", t.reflection_gain}, {"subflow_id", t.subflow_id}};
}

void from_json(const nlohmann::json& j, TargetTruth& t) {
  maybe(j, "velocity", t.velocity);
  maybe(j, "acceleration", t.acceleration);
  maybe(j, "doa_deg", t.doa_deg);
  maybe(j, "tof_s", t.tof_s);
  maybe(j, "reflection_gain", t.reflection_gain);
  maybe(j, "subflow_id", t.subflow_id);
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = {{"radio", c.radio},
       {"targets", c.targets},
       {"snr_db", snr_to_json(c.snr_db)},
       {"phase_error_mode",
        c.phase_error_mode == PhaseErrorMode::kNone ? "none" : "per_frame_uniform"},
       {"direct_path_gain", c.direct_path_gain},
       {"direct_doa_deg", c.direct_doa_deg},
       {"rng_seed", c.rng_seed},
       {"max_path_change_m", c.max_path_change_m},
       {"reference_multipath", c.reference_multipath}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  maybe(j, "radio", c.radio);
  maybe(j, "targets", c.targets);
  if (j.contains("snr_db")) c.snr_db = snr_from_json(j.at("snr_db"));
  if (j.contains("phase_error_mode")) {
    const std::string mode = j.at("phase_error_mode").get<std::string>();
    if (mode == "none") {
      c.phase_error_mode = PhaseErrorMode::kNone;
    } else if (mode == "per_frame_uniform") {
      c.phase_error_mode = PhaseErrorMode::kPerFrameUniform;
    } else {
      throw ConfigError("unknown phase_error_mode '" + mode + "'");
    }
  }
  maybe(j, "direct_path_gain", c.direct_path_gain);
  maybe(j, "direct_doa_deg", c.direct_doa_deg);
  maybe(j, "rng_seed", c.rng_seed);
  maybe(j, "max_path_change_m", c.max_path_change_m);
  maybe(j, "reference_multipath", c.reference_multipath);
}

void to_json(nlohmann::json& j, const SubflowSpread& s) {
  j = {{"velocity", s.velocity},
       {"acceleration", s.acceleration},
       {"doa_deg", s.doa_deg},
       {"tof_s", s.tof_s}};
}

void from_json(const nlohmann::json& j, SubflowSpread& s) {
  maybe(j, "velocity", s.velocity);
  maybe(j, "acceleration", s.acceleration);
  maybe(j, "doa_deg", s.doa_deg);
  maybe(j, "tof_s", s.tof_s);
}

void to_json(nlohmann::json& j, const ScenarioRanges& r) {
  j = {{"v", {r.v_min, r.v_max}},
       {"a", {r.a_min, r.a_max}},
       {"doa_deg", {r.doa_min, r.doa_max}},
       {"tof_s", {r.tof_min, r.tof_max}},
       {"gain", {r.gain_min, r.gain_max}},
       {"separation_margin", r.separation_margin},
       {"separate_every_dimension", r.separate_every_dimension},
       {"min_abs_velocity", r.min_abs_velocity}};
}

void from_json(const nlohmann::json& j, ScenarioRanges& r) {
  auto range = [&](const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) {
      throw ConfigError(std::string("range '") + key + "' must be [min, max]");
    }
    lo = v[0].get<double>();
    hi = v[1].get<double>();
    if (!(lo <= hi)) throw ConfigError(std::string("range '") + key + "' has min > max");
  };
  range("v", r.v_min, r.v_max);
  range("a", r.a_min, r.a_max);
  range("doa_deg", r.doa_min, r.doa_max);
  range("tof_s", r.tof_min, r.tof_max);
  range("gain", r.gain_min, r.gain_max);
  maybe(j, "separation_margin", r.separation_margin);
  maybe(j, "separate_every_dimension", r.separate_every_dimension);
  maybe(j, "min_abs_velocity", r.min_abs_velocity);
}

SimConfig Scenario::resolved() const {
  SimConfig out = sim;
  if (subflows) {
    out.targets = sample_subflow_scenario(subflows->sizes.size(), subflows->sizes,
                                          subflows->spread, subflows->seed, subflows->ranges);
  }
  return out;
}

void to_json(nlohmann::json& j, const Scenario& s) {
  to_json(j, s.sim);
  j["num_frames"] = s.num_frames;
  j["window_frames"] = s.window_frames;
  if (s.subflows) {
    j.erase("targets");
    j["subflows"] = {{"sizes", s.subflows->sizes},
                     {"spread", s.subflows->spread},
                     {"ranges", s.subflows->ranges},
                     {"seed", s.subflows->seed}};
  }
}

void from_json(const nlohmann::json& j, Scenario& s) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  from_json(j, s.sim);
  maybe(j, "num_frames", s.num_frames);
  maybe(j, "window_frames", s.window_frames);
  if (j.contains("subflows")) {
    if (j.contains("targets")) {
      throw ConfigError("give either 'targets' or 'subflows', not both");
    }
    const auto& sj = j.at("subflows");
    SubflowSpec spec;
    sj.at("sizes").get_to(spec.sizes);
    maybe(sj, "spread", spec.spread);
    maybe(sj, "ranges", spec.ranges);
    maybe(sj, "seed", spec.seed);
    s.subflows = spec;
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  Scenario s;
  try {
    s = nlohmann::json::parse(in).get<Scenario>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario " + path.string() + ": " + e.what());
  }
  if (s.num_frames < 1) throw ConfigError("num_frames must be >= 1");
  s.resolved().validate();
  return s;
}

}  // namespace ghfd
