#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ghfd/csi_sim.hpp"
#include "ghfd/spectrum_io.hpp"
#include "ghfd/va_spectrum.hpp"

namespace ghfd {

// Paired spectra for training a denoiser: a noisy condition and an expert
// target rendered from the same truth.
//
// VA pairs draw 1..7 targets with mid-window velocity in [-2, 2] m/s and
// acceleration in [-3, 3] m/s^2 and render one fused window at each SNR.
// DoA pairs draw one target and pair the ambiguous spectrum of the
// configured array with the spectrum of a half-wavelength array.
struct DatasetOptions {
  std::size_t num_pairs = 1;
  std::uint64_t seed = 1;
  SpecKind kind = SpecKind::kVa;
  std::size_t min_targets = 1;
  std::size_t max_targets = 7;
  double snr_noisy_db = -10.0;
  double snr_expert_db = 10.0;
  RadioConfig radio;
  FusionOptions fusion;
  std::size_t window_frames = 80;
  std::size_t threads = 1;
};

struct PairSample {
  std::vector<TargetTruth> targets;
  SpecFile noisy;
  SpecFile expert;
  // Grid cells of the truth on the expert spectrum.
  std::vector<std::array<std::uint32_t, 2>> truth_cells;
};

// Scales the grid so its maximum is 1; an all-zero grid is left alone.
SpecFile max_normalized(SpecFile spec);

// Deterministic in (options, pair_seed).
PairSample render_pair(const DatasetOptions& options, std::uint64_t pair_seed);

// Renders options.num_pairs pairs with seeds seed, seed + 1, ... into
// `out_dir` and writes the pair manifest. Returns the manifest path.
std::filesystem::path generate_dataset(const std::filesystem::path& out_dir,
                                       const DatasetOptions& options);

}  // namespace ghfd
