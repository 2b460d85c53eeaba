// Command-line front end: simulate, dataset, detect, eval, export-grid.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ghfd/boundary.hpp"
#include "ghfd/dataset.hpp"
#include "ghfd/metrics.hpp"
#include "ghfd/pipeline.hpp"
#include "ghfd/scenario.hpp"
#include "ghfd/spectrum_io.hpp"

namespace fs = std::filesystem;
using namespace ghfd;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitBoundary = 4;

Scenario default_scenario() {
  Scenario s;
  TargetTruth t;
  t.velocity = 1.2;
  t.acceleration = 0.5;
  t.doa_deg = 30.0;
  t.tof_s = 100e-9;
  t.reflection_gain = 0.25;
  s.sim.targets = {t};
  return s;
}

void merge_truth(const fs::path& manifest, const FlowTruth& truth) {
  std::vector<FlowTruth> all;
  if (fs::exists(manifest)) all = read_truth_manifest(manifest);
  std::erase_if(all, [&](const FlowTruth& t) { return t.id == truth.id; });
  all.push_back(truth);
  write_truth_manifest(manifest, all);
}

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> frames;
  std::string truth_manifest;
  std::string id;
};

int run_simulate(const SimulateArgs& a) {
  Scenario s = a.scenario.empty() ? default_scenario() : load_scenario(a.scenario);
  if (a.seed) s.sim.rng_seed = *a.seed;
  if (a.frames) s.num_frames = *a.frames;
  const SimConfig config = s.resolved();
  const CsiRecording rec = simulate_csi(config, s.num_frames);
  write_csi(a.out, rec);
  if (!a.truth_manifest.empty()) {
    const std::string id = a.id.empty() ? fs::path(a.out).stem().string() : a.id;
    merge_truth(a.truth_manifest, truth_from_targets(id, config.targets));
  }
  std::printf("wrote %s: M=%zu K=%zu frames=%zu targets=%zu\n", a.out.c_str(), rec.num_antennas(),
              rec.num_subcarriers(), rec.num_frames(), config.targets.size());
  return 0;
}

struct DatasetArgs {
  DatasetOptions options;
  std::string kind = "va";
  std::string out;
};

int run_dataset(DatasetArgs a) {
  if (a.kind == "va") {
    a.options.kind = SpecKind::kVa;
  } else if (a.kind == "doa") {
    a.options.kind = SpecKind::kDoa;
  } else {
    throw ConfigError("--kind must be va or doa");
  }
  if (a.options.threads == 0) {
    a.options.threads = std::max(1u, std::thread::hardware_concurrency());
  }
  const fs::path manifest = generate_dataset(a.out, a.options);
  std::printf("wrote %zu pairs, manifest %s\n", a.options.num_pairs, manifest.string().c_str());
  return 0;
}

struct DetectArgs {
  std::string csi;
  std::string out;
  bool no_denoiser = false;
  std::string model_dir;
  std::string work_dir;
  std::string dump_dir;
  std::string reference_csi;
  DetectOptions options;
};

int run_detect(DetectArgs a) {
  if (a.no_denoiser && !a.model_dir.empty()) {
    throw ConfigError("--no-denoiser and --model-dir are mutually exclusive");
  }
  const CsiRecording rec = read_csi(a.csi);

  std::optional<ProductStream> reference;
  if (!a.reference_csi.empty()) {
    const CsiRecording ref = read_csi(a.reference_csi);
    reference = remove_static(conjugate_multiply(ref), a.options.window_frames,
                              a.options.static_removal);
    a.options.estimator.reference = {&*reference, ref.config.radio};
  }

  std::optional<DenoiserBoundary> boundary;
  if (!a.model_dir.empty()) {
    BoundaryConfig config = boundary_config_from_env(a.model_dir);
    if (!a.work_dir.empty()) config.work_dir = a.work_dir;
    boundary.emplace(std::move(config));
    a.options.va_denoiser = [&](const std::vector<VaSpectrum>& spectra) {
      std::vector<VaSpectrum> scaled = spectra;
      for (auto& s : scaled) {
        const double top = s.grid.maxCoeff();
        if (top > 0.0) s.grid /= top;
      }
      return denoise_va(*boundary, scaled);
    };
    a.options.disambiguator = make_doa_disambiguator(*boundary);
  }

  const DetectResult result = detect(rec, a.options);
  atomic_write_text(a.out, nlohmann::json(result.report).dump(2) + "\n");
  if (!a.dump_dir.empty()) write_detect_dumps(a.dump_dir, result);
  std::printf("targets=%zu subflows=%zu sizes=%s\n", result.report.num_targets,
              result.report.num_subflows, size_label(result.report.subflow_sizes).c_str());
  return 0;
}

int run_eval(const std::string& truth, const std::string& reports, const std::string& out) {
  const DetectionMetrics m = evaluate_files(truth, reports);
  if (!out.empty()) atomic_write_text(out, nlohmann::json(m).dump(2) + "\n");
  std::printf("trials=%zu\n", m.scenarios.size());
  std::printf("target_count_da=%.6f\n", m.target_accuracy());
  std::printf("subflow_count_da=%.6f\n", m.subflow_accuracy());
  std::printf("subflow_size_da=%.6f\n", m.size_accuracy());
  return 0;
}

double axis_value(const AxisRange& axis, std::size_t i, std::size_t n) {
  if (n < 2) return axis.min;
  return axis.min + static_cast<double>(i) * (axis.max - axis.min) / static_cast<double>(n - 1);
}

int run_export(const std::string& spec_path, const std::string& out) {
  const SpecFile spec = read_spec(spec_path);
  std::string text;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  if (spec.kind == SpecKind::kVa) {
    text += "v\\a";
    for (std::uint32_t c = 0; c < spec.cols; ++c) text += "," + num(axis_value(spec.col_axis, c, spec.cols));
    text += "\n";
    for (std::uint32_t r = 0; r < spec.rows; ++r) {
      text += num(axis_value(spec.row_axis, r, spec.rows));
      for (std::uint32_t c = 0; c < spec.cols; ++c) text += "," + num(spec.at(r, c));
      text += "\n";
    }
  } else {
    text += spec.kind == SpecKind::kDoa ? "theta_deg,value\n" : "tof_s,value\n";
    for (std::uint32_t c = 0; c < spec.cols; ++c) {
      text += num(axis_value(spec.col_axis, c, spec.cols)) + "," + num(spec.at(0, c)) + "\n";
    }
  }
  atomic_write_text(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"G-HFD human flow detection on simulated WiFi CSI"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Render a CSI recording from a scenario file");
  simulate->add_option("--scenario", sim.scenario,
                       "Scenario JSON (default: one target at 1.2 m/s, 30 deg)")
      ->check(CLI::ExistingFile);
  simulate->add_option("out", sim.out, "Output CSI file")->required();
  simulate->add_option("--seed", sim.seed, "Override the scenario rng_seed");
  simulate->add_option("--frames", sim.frames, "Override the number of frames");
  simulate->add_option("--truth-manifest", sim.truth_manifest,
                       "Add this scenario's truth to a JSON Lines manifest");
  simulate->add_option("--id", sim.id, "Scenario id in the truth manifest (default: output stem)");

  DatasetArgs ds;
  auto* dataset = app.add_subcommand("dataset", "Render noisy/expert spectrum pairs and a manifest");
  dataset->add_option("--pairs", ds.options.num_pairs, "Number of pairs")->capture_default_str();
  dataset->add_option("--out", ds.out, "Output directory")->required();
  dataset->add_option("--seed", ds.options.seed, "Seed of the first pair")->capture_default_str();
  dataset->add_option("--kind", ds.kind, "va or doa")->capture_default_str();
  dataset->add_option("--min-targets", ds.options.min_targets)->capture_default_str();
  dataset->add_option("--max-targets", ds.options.max_targets)->capture_default_str();
  dataset->add_option("--snr-noisy", ds.options.snr_noisy_db, "dB")->capture_default_str();
  dataset->add_option("--snr-expert", ds.options.snr_expert_db, "dB")->capture_default_str();
  dataset->add_option("--threads", ds.options.threads, "Worker threads, 0 for all cores")
      ->capture_default_str();

  DetectArgs det;
  auto* detect_cmd = app.add_subcommand("detect", "Detect targets and subflows in a CSI file");
  detect_cmd->add_option("csi", det.csi, "Input CSI file")->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--out", det.out, "FlowReport JSON output")->required();
  detect_cmd->add_flag("--no-denoiser", det.no_denoiser,
                       "Use the built-in fallbacks (the default without --model-dir)");
  detect_cmd->add_option("--model-dir", det.model_dir,
                         std::string("Denoise through the external service; its command comes "
                                     "from ") + kServeCommandEnv);
  detect_cmd->add_option("--work-dir", det.work_dir,
                         std::string("Exchange directory (default: $") + kWorkDirEnv + ")");
  detect_cmd->add_option("--dump", det.dump_dir, "Write intermediate spectra and points here");
  detect_cmd->add_option("--reference-csi", det.reference_csi,
                         "Half-wavelength recording of the same scene for alias resolution")
      ->check(CLI::ExistingFile);
  detect_cmd->add_option("--windows", det.options.max_windows, "Windows to analyse, 0 for all")
      ->capture_default_str();
  detect_cmd->add_option("--window-frames", det.options.window_frames)->capture_default_str();
  detect_cmd->add_option("--threshold", det.options.peak_threshold,
                         "Peak threshold as a fraction of the spectrum maximum")
      ->capture_default_str();
  detect_cmd->add_option("--candidates", det.options.preference_candidates,
                         "Affinity propagation preference candidates")
      ->capture_default_str();

  std::string eval_truth, eval_reports, eval_out;
  auto* eval = app.add_subcommand("eval", "Detection accuracy and confusion matrices");
  eval->add_option("truth", eval_truth, "Truth manifest (JSON Lines)")->required();
  eval->add_option("reports", eval_reports, "Directory of <id>.json FlowReports")->required();
  eval->add_option("--out", eval_out, "Write the metrics as JSON");

  std::string export_in, export_out;
  auto* export_grid = app.add_subcommand("export-grid", "Convert a SPEC file to CSV");
  export_grid->add_option("spec", export_in, "Input SPEC file")->required();
  export_grid->add_option("csv", export_out, "Output CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*dataset) return run_dataset(ds);
    if (*detect_cmd) return run_detect(det);
    if (*eval) return run_eval(eval_truth, eval_reports, eval_out);
    if (*export_grid) return run_export(export_in, export_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const BoundaryError& e) {
    std::cerr << "denoiser error: " << e.what() << "\n";
    return kExitBoundary;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
