#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ghfd/common.hpp"
#include "ghfd/radio.hpp"

namespace ghfd {

// Ground truth for one human-induced reflection. Velocity and acceleration
// are the rates of propagation-path-length change at the start of the
// recording; ToF is the delay relative to the direct path.
struct TargetTruth {
  double velocity = 0.0;         // m/s
  double acceleration = 0.0;     // m/s^2
  double doa_deg = 0.0;          // [-90, 90]
  double tof_s = 0.0;            // [0, 1/subcarrier spacing)
  double reflection_gain = 0.2;  // (0, 1), linear amplitude
  int subflow_id = -1;           // scenario bookkeeping, -1 when unassigned
};

enum class PhaseErrorMode { kNone, kPerFrameUniform };

struct SimConfig {
  RadioConfig radio;
  std::vector<TargetTruth> targets;
  double snr_db = std::numeric_limits<double>::infinity();
  PhaseErrorMode phase_error_mode = PhaseErrorMode::kPerFrameUniform;
  double direct_path_gain = 1.0;
  double direct_doa_deg = 0.0;
  std::uint64_t rng_seed = 1;
  // Upper bound on |v t + a t^2 / 2| over the recording; beyond this the
  // constant-acceleration model is not trusted.
  double max_path_change_m = 10.0;
  // Adds a weak static second path on the reference antenna.
  bool reference_multipath = false;

  void validate() const;
};

struct CsiRecording {
  CTensor3 surveillance;      // M x K x frames
  Eigen::MatrixXcd reference;  // K x frames
  SimConfig config;
  double frame_period_s = 0.0;

  std::size_t num_antennas() const { return surveillance.dim0(); }
  std::size_t num_subcarriers() const { return surveillance.dim1(); }
  std::size_t num_frames() const { return surveillance.dim2(); }
};

// Renders surveillance and reference CSI for `num_frames` packets. Pure
// function of (config, num_frames).
CsiRecording simulate_csi(const SimConfig& config, std::size_t num_frames);

struct SubflowSpread {
  double velocity = 0.05;
  double acceleration = 0.1;
  double doa_deg = 2.0;
  double tof_s = 5e-9;
};

struct ScenarioRanges {
  double v_min = -2.0, v_max = 2.0;
  double a_min = -3.0, a_max = 3.0;
  double doa_min = -70.0, doa_max = 70.0;
  double tof_min = 20e-9, tof_max = 600e-9;
  double gain_min = 0.05, gain_max = 0.3;
  // Minimum Euclidean distance between subflow centres over (v, DoA, ToF),
  // measured in units of the per-dimension spread.
  double separation_margin = 5.0;
  // Require the margin along each of v, DoA and ToF instead of in Euclidean
  // distance.
  bool separate_every_dimension = false;
  // Centres with |v| below this are resampled (static-looking targets are
  // removed together with the direct path).
  double min_abs_velocity = 0.0;
};

// Draws subflow centres, then jitters each member around its centre. Members
// carry their subflow index in TargetTruth::subflow_id.
std::vector<TargetTruth> sample_subflow_scenario(std::size_t num_subflows,
                                                 const std::vector<std::size_t>& sizes,
                                                 const SubflowSpread& spread,
                                                 std::uint64_t rng_seed,
                                                 const ScenarioRanges& ranges = {});

}  // namespace ghfd
