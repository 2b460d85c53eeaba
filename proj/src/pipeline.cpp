#include "ghfd/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "ghfd/spectrum_io.hpp"

namespace ghfd {
namespace {

double window_energy(const ProductStream& stream, std::size_t window, std::size_t w) {
  double e = 0.0;
  for (std::size_t m = 0; m < stream.num_antennas(); ++m) {
    for (std::size_t k = 0; k < stream.num_subcarriers(); ++k) {
      const cd* s = stream.values.series(m, k) + window * w;
      for (std::size_t t = 0; t < w; ++t) e += std::norm(s[t]);
    }
  }
  return e;
}

const char* resolution_name(DoaResolution r) {
  switch (r) {
    case DoaResolution::kNone: return "none";
    case DoaResolution::kWideband: return "wideband";
    case DoaResolution::kReferenceSpacing: return "reference_spacing";
    case DoaResolution::kExternal: return "external";
  }
  return "none";
}

}  // namespace

std::size_t target_count_mode(const std::vector<std::size_t>& counts) {
  std::map<std::size_t, std::size_t> freq;
  for (std::size_t c : counts) ++freq[c];
  std::size_t best = 0;
  std::size_t best_freq = 0;
  for (const auto& [count, n] : freq) {
    if (n >= best_freq) {
      best = count;
      best_freq = n;
    }
  }
  return best;
}

DetectResult detect(const CsiRecording& recording, const DetectOptions& options) {
  const RadioConfig& radio = recording.config.radio;
  radio.validate();
  if (radio.num_ula_antennas != recording.num_antennas() ||
      radio.num_subcarriers != recording.num_subcarriers()) {
    throw DataError("recording dimensions disagree with its radio configuration");
  }
  if (!(options.peak_threshold > 0.0 && options.peak_threshold < 1.0)) {
    throw ConfigError("peak threshold must lie in (0, 1)");
  }

  const ProductStream product = conjugate_multiply(recording);
  const ProductStream stream = remove_static(product, options.window_frames, options.static_removal);
  std::size_t num_windows = stream.num_windows();
  if (num_windows == 0) {
    throw DataError("recording has " + std::to_string(recording.num_frames()) +
                    " frames, fewer than one window of " + std::to_string(options.window_frames));
  }
  if (options.max_windows > 0) num_windows = std::min(num_windows, options.max_windows);

  DetectResult result;
  result.windows.resize(num_windows);
  std::vector<VaSpectrum> spectra;
  for (std::size_t w = 0; w < num_windows; ++w) {
    WindowResult& win = result.windows[w];
    win.window = w;
    const double before = window_energy(product, w, options.window_frames);
    win.dynamic_ratio = before > 0.0 ? window_energy(stream, w, options.window_frames) / before : 0.0;
    win.spectrum = fused_va_spectrum(stream, w, radio, options.fusion);
    spectra.push_back(win.spectrum);
  }

  if (options.va_denoiser) {
    auto denoised = options.va_denoiser(spectra);
    if (denoised.size() != spectra.size()) {
      throw BoundaryError("V-A denoiser returned " + std::to_string(denoised.size()) +
                          " spectra for " + std::to_string(spectra.size()));
    }
    for (std::size_t w = 0; w < num_windows; ++w) {
      result.windows[w].denoised = std::move(denoised[w]);
    }
  }

  std::vector<std::size_t> counts;
  for (auto& win : result.windows) {
    if (win.dynamic_ratio >= options.min_dynamic_ratio) {
      const VaSpectrum& used = win.denoised ? *win.denoised : win.spectrum;
      win.peaks = detect_peaks(used, options.peak_threshold);
    }
    counts.push_back(win.peaks.size());
    if (!win.peaks.empty()) {
      win.estimates = analyze_peaks(stream, win.window, win.peaks, radio, options.estimator);
    }
  }

  if (options.disambiguator && radio.antenna_spacing_wavelengths > 0.5) {
    std::vector<DoaSpectrum> ambiguous;
    for (const auto& win : result.windows) {
      for (const auto& est : win.estimates) ambiguous.push_back(est.ambiguous);
    }
    if (!ambiguous.empty()) {
      const auto clear = options.disambiguator(ambiguous);
      if (clear.size() != ambiguous.size()) {
        throw BoundaryError("DoA disambiguator returned " + std::to_string(clear.size()) +
                            " spectra for " + std::to_string(ambiguous.size()));
      }
      std::size_t i = 0;
      for (auto& win : result.windows) {
        for (auto& est : win.estimates) apply_clear_spectrum(est, clear[i++]);
      }
    }
  }

  result.upsilon = target_count_mode(counts);
  for (const auto& win : result.windows) {
    for (const auto& est : win.estimates) result.points.points.push_back(est.point);
  }
  if (result.upsilon == 0) return result;
  result.report = cluster_flows(result.points, result.upsilon, options.preference_candidates,
                                options.sweep, options.kmeans);
  return result;
}

void write_detect_dumps(const std::filesystem::path& dir, const DetectResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create dump directory " + dir.string() + ": " + ec.message());

  nlohmann::json windows = nlohmann::json::array();
  char name[64];
  for (const auto& win : result.windows) {
    std::snprintf(name, sizeof name, "window%03zu", win.window);
    const std::string stem = name;
    write_spec(dir / (stem + ".va.spec"), to_spec(win.spectrum));
    if (win.denoised) write_spec(dir / (stem + ".va_denoised.spec"), to_spec(*win.denoised));
    nlohmann::json peaks = nlohmann::json::array();
    for (std::size_t p = 0; p < win.estimates.size(); ++p) {
      const auto& est = win.estimates[p];
      std::snprintf(name, sizeof name, "%s.peak%02zu", stem.c_str(), p);
      write_spec(dir / (std::string(name) + ".doa_ambiguous.spec"), to_spec(est.ambiguous));
      write_spec(dir / (std::string(name) + ".doa_clear.spec"), to_spec(est.clear));
      write_spec(dir / (std::string(name) + ".tof.spec"), to_spec(est.tof));
      peaks.push_back({{"velocity", est.peak.velocity},
                       {"acceleration", est.peak.acceleration},
                       {"magnitude", est.peak.magnitude},
                       {"doa_deg", est.point.phi_hat},
                       {"tof_s", est.point.tau_hat},
                       {"resolution", resolution_name(est.resolution)}});
    }
    windows.push_back({{"window", win.window},
                       {"dynamic_ratio", win.dynamic_ratio},
                       {"num_peaks", win.peaks.size()},
                       {"peaks", peaks}});
  }
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : result.points.points) points.push_back({p.v_hat, p.phi_hat, p.tau_hat});
  const nlohmann::json doc = {{"upsilon", result.upsilon},
                              {"windows", windows},
                              {"points", points},
                              {"report", result.report}};
  atomic_write_text(dir / "points.json", doc.dump(2) + "\n");
}

}  // namespace ghfd
