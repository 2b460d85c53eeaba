#include <doctest.h>

#include <cmath>
#include <fstream>

#include "ghfd/scenario.hpp"
#include "support.hpp"

using namespace ghfd;
using ghfd::test::TempDir;

namespace {

std::filesystem::path write(const TempDir& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("a minimal file takes every default") {
  TempDir dir;
  const Scenario s = load_scenario(write(dir, "s.json", "{}"));
  CHECK(s.num_frames == 800);
  CHECK(s.window_frames == 80);
  CHECK(s.sim.targets.empty());
  CHECK(std::isinf(s.sim.snr_db));
  CHECK(s.sim.phase_error_mode == PhaseErrorMode::kPerFrameUniform);
  CHECK(s.sim.radio.num_subcarriers == 64);
  CHECK_FALSE(s.subflows.has_value());
}

TEST_CASE("explicit targets and radio fields are read") {
  TempDir dir;
  const Scenario s = load_scenario(write(dir, "s.json", R"({
    "radio": {"antenna_spacing_wavelengths": 0.5, "packet_rate_hz": 500},
    "targets": [{"velocity": 1.6, "acceleration": -0.4, "doa_deg": 12, "tof_s": 1e-7,
                 "reflection_gain": 0.2}],
    "snr_db": 7.5, "phase_error_mode": "none", "rng_seed": 42, "num_frames": 160})"));
  CHECK(s.sim.radio.antenna_spacing_wavelengths == 0.5);
  CHECK(s.sim.radio.packet_rate_hz == 500.0);
  REQUIRE(s.sim.targets.size() == 1);
  CHECK(s.sim.targets[0].velocity == 1.6);
  CHECK(s.sim.targets[0].subflow_id == -1);
  CHECK(s.sim.snr_db == 7.5);
  CHECK(s.sim.phase_error_mode == PhaseErrorMode::kNone);
  CHECK(s.sim.rng_seed == 42);
  CHECK(s.num_frames == 160);
}

TEST_CASE("JSON round trip keeps infinity and subflow blocks") {
  Scenario s;
  s.sim.targets = {ghfd::test::make_target(1, 0, 5, 5e-8)};
  s.sim.reference_multipath = true;
  s.num_frames = 320;
  nlohmann::json j = s;
  CHECK(j["snr_db"] == "inf");
  const Scenario back = j.get<Scenario>();
  CHECK(std::isinf(back.sim.snr_db));
  CHECK(back.sim.reference_multipath);
  CHECK(back.num_frames == 320);
  CHECK(back.sim.targets[0].doa_deg == 5.0);

  Scenario sub;
  sub.subflows = SubflowSpec{{2, 1}, {}, {}, 7};
  sub.subflows->ranges.a_min = -0.3;
  sub.subflows->ranges.a_max = 0.3;
  const Scenario sub_back = nlohmann::json(sub).get<Scenario>();
  REQUIRE(sub_back.subflows.has_value());
  CHECK(sub_back.subflows->sizes == std::vector<std::size_t>{2, 1});
  CHECK(sub_back.subflows->ranges.a_max == 0.3);
  CHECK(sub_back.subflows->seed == 7);
}

TEST_CASE("subflow blocks expand deterministically") {
  TempDir dir;
  const Scenario s = load_scenario(write(dir, "s.json", R"({
    "subflows": {"sizes": [3, 1], "seed": 5,
                 "ranges": {"a": [-0.3, 0.3], "min_abs_velocity": 0.5}}})"));
  const SimConfig a = s.resolved();
  const SimConfig b = s.resolved();
  REQUIRE(a.targets.size() == 4);
  CHECK(a.targets[0].subflow_id == 0);
  CHECK(a.targets[3].subflow_id == 1);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.targets[i].velocity == b.targets[i].velocity);
    CHECK(std::abs(a.targets[i].acceleration) <= 0.3);
  }
}

TEST_CASE("malformed scenarios raise ConfigError") {
  TempDir dir;
  CHECK_THROWS_AS(load_scenario(dir / "missing.json"), ConfigError);
  CHECK_THROWS_AS(load_scenario(write(dir, "a.json", "{not json")), ConfigError);
  CHECK_THROWS_AS(load_scenario(write(dir, "b.json", "[1, 2]")), ConfigError);
  CHECK_THROWS_AS(load_scenario(write(dir, "c.json", R"({"snr_db": "loud"})")), ConfigError);
  CHECK_THROWS_AS(load_scenario(write(dir, "d.json", R"({"phase_error_mode": "odd"})")), ConfigError);
  CHECK_THROWS_AS(load_scenario(write(dir, "e.json", R"({"targets": [{"doa_deg": 120}]})")),
                  ConfigError);
  CHECK_THROWS_AS(load_scenario(write(dir, "f.json", R"({"num_frames": 0})")), ConfigError);
  CHECK_THROWS_AS(
      load_scenario(write(dir, "g.json", R"({"targets": [], "subflows": {"sizes": [1]}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_scenario(write(dir, "h.json", R"({"subflows": {"sizes": [1], "ranges": {"v": [1]}}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_scenario(write(dir, "i.json", R"({"subflows": {"sizes": [1], "ranges": {"v": [2, 1]}}})")),
      ConfigError);
  CHECK_THROWS_AS(load_scenario(write(dir, "j.json", R"({"radio": {"num_ula_antennas": 1}})")),
                  ConfigError);
}

}  // TEST_SUITE
