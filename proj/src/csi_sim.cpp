#include "ghfd/csi_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace ghfd {
namespace {

double max_path_change(const TargetTruth& t, double duration_s) {
  auto pplc = [&](double s) { return t.velocity * s + 0.5 * t.acceleration * s * s; };
  double worst = std::max(std::abs(pplc(0.0)), std::abs(pplc(duration_s)));
  if (t.acceleration != 0.0) {
    const double vertex = -t.velocity / t.acceleration;
    if (vertex > 0.0 && vertex < duration_s) worst = std::max(worst, std::abs(pplc(vertex)));
  }
  return worst;
}

double mean_power(const std::vector<cd>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (const cd& x : v) acc += std::norm(x);
  return acc / static_cast<double>(v.size());
}

void add_noise(std::vector<cd>& samples, double snr_db, std::mt19937_64& rng) {
  if (std::isinf(snr_db) && snr_db > 0.0) return;
  const double noise_power = mean_power(samples) / std::pow(10.0, snr_db / 10.0);
  std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power / 2.0));
  for (cd& x : samples) x += cd(gauss(rng), gauss(rng));
}

}  // namespace

void SimConfig::validate() const {
  radio.validate();
  if (!(direct_path_gain > 0.0)) throw ConfigError("direct_path_gain must be positive");
  if (!(max_path_change_m > 0.0)) throw ConfigError("max_path_change_m must be positive");
  if (std::isnan(snr_db)) throw ConfigError("snr_db must not be NaN");
  const double tof_period = radio.tof_period_s();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const TargetTruth& t = targets[i];
    const std::string who = "target " + std::to_string(i) + ": ";
    if (!std::isfinite(t.velocity) || !std::isfinite(t.acceleration)) {
      throw ConfigError(who + "velocity and acceleration must be finite");
    }
    if (!(std::abs(t.doa_deg) <= 90.0)) throw ConfigError(who + "|doa_deg| must be <= 90");
    if (!(t.tof_s >= 0.0 && t.tof_s < tof_period)) {
      throw ConfigError(who + "tof_s must lie in [0, 1/subcarrier_spacing)");
    }
    if (!(t.reflection_gain > 0.0 && t.reflection_gain < 1.0)) {
      throw ConfigError(who + "reflection_gain must lie in (0, 1)");
    }
    if (!(direct_path_gain > t.reflection_gain)) {
      throw ConfigError(who + "reflection_gain must stay below direct_path_gain");
    }
  }
}

CsiRecording simulate_csi(const SimConfig& config, std::size_t num_frames) {
  config.validate();
  if (num_frames < 1) throw ConfigError("num_frames must be >= 1");

  const RadioConfig& radio = config.radio;
  const std::size_t M = radio.num_ula_antennas;
  const std::size_t K = radio.num_subcarriers;
  const std::size_t W = num_frames;
  const double dt = radio.frame_period_s();
  const double spacing = radio.antenna_spacing_m();

  const double duration = dt * static_cast<double>(W - 1);
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    if (max_path_change(config.targets[i], duration) > config.max_path_change_m) {
      throw ConfigError("target " + std::to_string(i) +
                        ": path-length change over the recording exceeds max_path_change_m");
    }
  }

  std::mt19937_64 rng(config.rng_seed);
  std::vector<double> epsilon(W, 0.0);
  if (config.phase_error_mode == PhaseErrorMode::kPerFrameUniform) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& e : epsilon) e = unit(rng);
  }

  CsiRecording rec;
  rec.config = config;
  rec.frame_period_s = dt;
  rec.surveillance = CTensor3(M, K, W);
  rec.reference = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(W));

  const double direct_sin = std::sin(config.direct_doa_deg * kPi / 180.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double fk = radio.subcarrier_hz(k);
    const double two_pi_f_over_c = 2.0 * kPi * fk / kSpeedOfLight;
    for (std::size_t m = 0; m < M; ++m) {
      const double md = static_cast<double>(m) * spacing;
      const cd direct = config.direct_path_gain * std::polar(1.0, -two_pi_f_over_c * md * direct_sin);
      cd* out = rec.surveillance.series(m, k);
      for (std::size_t w = 0; w < W; ++w) out[w] = direct;
      for (const TargetTruth& t : config.targets) {
        const double spatial = md * std::sin(t.doa_deg * kPi / 180.0);
        const double static_phase = 2.0 * kPi * fk * t.tof_s + two_pi_f_over_c * spatial;
        for (std::size_t w = 0; w < W; ++w) {
          const double s = static_cast<double>(w) * dt;
          const double pplc = t.velocity * s + 0.5 * t.acceleration * s * s;
          out[w] += std::polar(t.reflection_gain, -(static_phase + two_pi_f_over_c * pplc));
        }
      }
      for (std::size_t w = 0; w < W; ++w) out[w] *= std::polar(1.0, -2.0 * kPi * epsilon[w]);
    }

    cd ref = config.direct_path_gain;
    if (config.reference_multipath) {
      ref += 0.1 * config.direct_path_gain * std::polar(1.0, -2.0 * kPi * fk * 30e-9);
    }
    for (std::size_t w = 0; w < W; ++w) {
      rec.reference(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w)) =
          ref * std::polar(1.0, -2.0 * kPi * epsilon[w]);
    }
  }

  add_noise(rec.surveillance.data(), config.snr_db, rng);
  std::vector<cd> ref_flat(rec.reference.data(), rec.reference.data() + rec.reference.size());
  add_noise(ref_flat, config.snr_db, rng);
  std::copy(ref_flat.begin(), ref_flat.end(), rec.reference.data());
  return rec;
}

std::vector<TargetTruth> sample_subflow_scenario(std::size_t num_subflows,
                                                 const std::vector<std::size_t>& sizes,
                                                 const SubflowSpread& spread,
                                                 std::uint64_t rng_seed,
                                                 const ScenarioRanges& ranges) {
  if (sizes.size() != num_subflows) {
    throw ConfigError("sizes must have one entry per subflow");
  }
  for (std::size_t s : sizes) {
    if (s < 1) throw ConfigError("every subflow needs at least one member");
  }
  if (!(spread.velocity > 0.0 && spread.doa_deg > 0.0 && spread.tof_s > 0.0 &&
        spread.acceleration >= 0.0)) {
    throw ConfigError("spread must be positive in v, DoA and ToF");
  }

  std::mt19937_64 rng(rng_seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  std::vector<TargetTruth> centres;
  centres.reserve(num_subflows);
  constexpr int kMaxAttempts = 1000;
  for (std::size_t s = 0; s < num_subflows; ++s) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      TargetTruth c;
      c.velocity = uniform(ranges.v_min, ranges.v_max);
      c.acceleration = uniform(ranges.a_min, ranges.a_max);
      c.doa_deg = uniform(ranges.doa_min, ranges.doa_max);
      c.tof_s = uniform(ranges.tof_min, ranges.tof_max);
      c.reflection_gain = uniform(ranges.gain_min, ranges.gain_max);
      c.subflow_id = static_cast<int>(s);
      if (std::abs(c.velocity) < ranges.min_abs_velocity) continue;
      placed = std::all_of(centres.begin(), centres.end(), [&](const TargetTruth& o) {
        const double dv = (c.velocity - o.velocity) / spread.velocity;
        const double dp = (c.doa_deg - o.doa_deg) / spread.doa_deg;
        const double dtau = (c.tof_s - o.tof_s) / spread.tof_s;
        if (ranges.separate_every_dimension) {
          return std::min({std::abs(dv), std::abs(dp), std::abs(dtau)}) >= ranges.separation_margin;
        }
        return std::sqrt(dv * dv + dp * dp + dtau * dtau) >= ranges.separation_margin;
      });
      if (placed) centres.push_back(c);
    }
    if (!placed) {
      throw ConfigError("could not place subflow " + std::to_string(s) +
                        " with the requested separation margin");
    }
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TargetTruth> targets;
  for (std::size_t s = 0; s < num_subflows; ++s) {
    for (std::size_t i = 0; i < sizes[s]; ++i) {
      TargetTruth t = centres[s];
      t.velocity = std::clamp(t.velocity + spread.velocity * gauss(rng), ranges.v_min, ranges.v_max);
      t.acceleration =
          std::clamp(t.acceleration + spread.acceleration * gauss(rng), ranges.a_min, ranges.a_max);
      t.doa_deg = std::clamp(t.doa_deg + spread.doa_deg * gauss(rng), -90.0, 90.0);
      t.tof_s = std::clamp(t.tof_s + spread.tof_s * gauss(rng), 0.0, ranges.tof_max);
      targets.push_back(t);
    }
  }
  return targets;
}

}  // namespace ghfd
