#include "ghfd/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "ghfd/array_estimator.hpp"
#include "ghfd/preprocess.hpp"

namespace ghfd {
namespace {

ProductStream render_stream(const SimConfig& config, std::size_t window_frames) {
  const CsiRecording rec = simulate_csi(config, window_frames);
  return remove_static(conjugate_multiply(rec), window_frames);
}

TargetTruth draw_target(std::mt19937_64& rng, const DatasetOptions& o, double v_mid, double a) {
  std::uniform_real_distribution<double> doa(-70.0, 70.0);
  std::uniform_real_distribution<double> tof(20e-9, 600e-9);
  std::uniform_real_distribution<double> gain(0.1, 0.3);
  TargetTruth t;
  t.acceleration = a;
  t.velocity = window_start_velocity(v_mid, a, o.window_frames, o.radio.frame_period_s());
  t.doa_deg = doa(rng);
  t.tof_s = tof(rng);
  t.reflection_gain = gain(rng);
  return t;
}

PairSample render_va_pair(const DatasetOptions& o, std::uint64_t pair_seed) {
  std::mt19937_64 rng(pair_seed);
  std::uniform_int_distribution<std::size_t> count(o.min_targets, o.max_targets);
  std::uniform_real_distribution<double> vel(o.fusion.axes.v_min, o.fusion.axes.v_max);
  std::uniform_real_distribution<double> acc(o.fusion.axes.a_min, o.fusion.axes.a_max);

  PairSample out;
  const std::size_t n = count(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double v_mid = vel(rng);
    const double a = acc(rng);
    out.targets.push_back(draw_target(rng, o, v_mid, a));
    out.truth_cells.push_back({static_cast<std::uint32_t>(o.fusion.axes.nearest_v(v_mid)),
                               static_cast<std::uint32_t>(o.fusion.axes.nearest_a(a))});
  }

  SimConfig config;
  config.radio = o.radio;
  config.targets = out.targets;
  auto render = [&](double snr, std::uint64_t noise_seed) {
    config.snr_db = snr;
    config.rng_seed = noise_seed;
    const ProductStream stream = render_stream(config, o.window_frames);
    return max_normalized(to_spec(fused_va_spectrum(stream, 0, o.radio, o.fusion)));
  };
  out.noisy = render(o.snr_noisy_db, 2 * pair_seed + 1);
  out.expert = render(o.snr_expert_db, 2 * pair_seed + 2);
  return out;
}

PairSample render_doa_pair(const DatasetOptions& o, std::uint64_t pair_seed) {
  std::mt19937_64 rng(pair_seed);
  // Slow movers sit near the DC null, so keep |v| away from zero.
  std::uniform_real_distribution<double> speed(0.8, 2.0);
  std::uniform_real_distribution<double> acc(-1.0, 1.0);
  std::bernoulli_distribution sign(0.5);
  const double v_mid = sign(rng) ? speed(rng) : -speed(rng);
  const double a = acc(rng);

  PairSample out;
  out.targets.push_back(draw_target(rng, o, v_mid, a));
  VaPeak peak;
  peak.velocity = v_mid;
  peak.acceleration = a;
  peak.magnitude = 1.0;

  auto render = [&](double spacing, double snr, std::uint64_t noise_seed) {
    SimConfig config;
    config.radio = o.radio;
    config.radio.antenna_spacing_wavelengths = spacing;
    config.targets = out.targets;
    config.snr_db = snr;
    config.rng_seed = noise_seed;
    const ProductStream stream = render_stream(config, o.window_frames);
    const auto est = analyze_peaks(stream, 0, {peak}, config.radio);
    return max_normalized(to_spec(est.front().ambiguous));
  };
  out.noisy = render(o.radio.antenna_spacing_wavelengths, o.snr_noisy_db, 2 * pair_seed + 1);
  out.expert = render(0.5, o.snr_expert_db, 2 * pair_seed + 2);
  const double bin = std::round(out.targets.front().doa_deg) + 90.0;
  out.truth_cells.push_back({0, static_cast<std::uint32_t>(bin)});
  return out;
}

}  // namespace

SpecFile max_normalized(SpecFile spec) {
  float top = 0.0f;
  for (float v : spec.payload) top = std::max(top, v);
  if (top > 0.0f) {
    for (float& v : spec.payload) v /= top;
  }
  return spec;
}

PairSample render_pair(const DatasetOptions& options, std::uint64_t pair_seed) {
  if (options.min_targets < 1 || options.min_targets > options.max_targets) {
    throw ConfigError("target count range must satisfy 1 <= min <= max");
  }
  if (options.window_frames < 2) throw ConfigError("window_frames must be >= 2");
  options.radio.validate();
  switch (options.kind) {
    case SpecKind::kVa: return render_va_pair(options, pair_seed);
    case SpecKind::kDoa: return render_doa_pair(options, pair_seed);
    case SpecKind::kTof: break;
  }
  throw ConfigError("datasets are built for VA or DoA spectra only");
}

std::filesystem::path generate_dataset(const std::filesystem::path& out_dir,
                                       const DatasetOptions& options) {
  if (options.num_pairs < 1) throw ConfigError("dataset needs at least one pair");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<PairRecord> records(options.num_pairs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= options.num_pairs) return;
      try {
        const std::uint64_t seed = options.seed + i;
        const PairSample pair = render_pair(options, seed);
        char stem[32];
        std::snprintf(stem, sizeof stem, "pair%06zu", i);
        PairRecord& rec = records[i];
        rec.noisy_path = std::string(stem) + ".noisy.spec";
        rec.expert_path = std::string(stem) + ".expert.spec";
        write_spec(out_dir / rec.noisy_path, pair.noisy);
        write_spec(out_dir / rec.expert_path, pair.expert);
        rec.num_targets = pair.targets.size();
        rec.snr_noisy_db = options.snr_noisy_db;
        rec.snr_expert_db = options.snr_expert_db;
        rec.seed = seed;
        rec.truth_cells = pair.truth_cells;
        rec.kind = options.kind;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.num_pairs;
        return;
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(options.threads, 1, options.num_pairs);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return emit_pair_manifest(out_dir, std::move(records));
}

}  // namespace ghfd
