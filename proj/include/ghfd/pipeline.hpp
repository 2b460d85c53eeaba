#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "ghfd/array_estimator.hpp"
#include "ghfd/csi_sim.hpp"
#include "ghfd/flow_cluster.hpp"
#include "ghfd/preprocess.hpp"
#include "ghfd/va_spectrum.hpp"

namespace ghfd {

using VaDenoiser = std::function<std::vector<VaSpectrum>(const std::vector<VaSpectrum>&)>;

struct DetectOptions {
  std::size_t window_frames = 80;
  // Leading complete windows to analyse; 0 uses them all.
  std::size_t max_windows = 10;
  StaticRemovalOptions static_removal;
  FusionOptions fusion;
  double peak_threshold = 0.3;
  // A window whose moving energy is below this fraction of its static energy
  // is treated as empty, whatever its relative peak shape.
  double min_dynamic_ratio = 1e-6;
  EstimatorOptions estimator;
  std::size_t preference_candidates = 10;
  SweepOptions sweep;
  KMeansOptions kmeans;
  // Empty functions skip the boundary and use the built-in fallbacks.
  VaDenoiser va_denoiser;
  DoaDisambiguator disambiguator;
};

struct WindowResult {
  std::size_t window = 0;
  VaSpectrum spectrum;                  // fused, before denoising
  std::optional<VaSpectrum> denoised;
  double dynamic_ratio = 0.0;
  std::vector<VaPeak> peaks;
  std::vector<PeakEstimate> estimates;
};

struct DetectResult {
  std::vector<WindowResult> windows;
  std::size_t upsilon = 0;
  PointSet points;
  FlowReport report;
};

// Most frequent value; ties go to the larger count. Empty input gives 0.
std::size_t target_count_mode(const std::vector<std::size_t>& counts);

// Conjugate multiplication, static removal, per-window V-A spectra and peaks,
// per-peak DoA/ToF, then flow clustering over the points of every window.
DetectResult detect(const CsiRecording& recording, const DetectOptions& options = {});

// Writes the intermediates: per-window VA SPEC files (and denoised ones),
// per-peak DoA and ToF spectra, and points.json with the parameter points.
void write_detect_dumps(const std::filesystem::path& dir, const DetectResult& result);

}  // namespace ghfd
