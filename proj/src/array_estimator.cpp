#include "ghfd/array_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ghfd {
namespace {

constexpr double kResidualFloor = 1e-15;

double deg2rad(double deg) { return deg * kPi / 180.0; }

void require_window(const ProductStream& stream, std::size_t window) {
  if (!stream.dc_removed) throw DataError("array estimation needs a DC-nulled stream");
  if (window >= stream.num_windows()) {
    throw DataError("window " + std::to_string(window) + " is out of range (stream has " +
                    std::to_string(stream.num_windows()) + ")");
  }
}

// Columns are snapshots: each stacks rows x temporal_len samples starting at
// successive frames, row-major in (row, lag).
Eigen::MatrixXcd temporal_snapshots(const Eigen::MatrixXcd& data, std::size_t temporal_len) {
  const Eigen::Index rows = data.rows();
  const Eigen::Index len = static_cast<Eigen::Index>(temporal_len);
  const Eigen::Index count = data.cols() - len + 1;
  Eigen::MatrixXcd x(rows * len, std::max<Eigen::Index>(count, 0));
  for (Eigen::Index s = 0; s < count; ++s) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      x.col(s).segment(r * len, len) = data.row(r).segment(s, len).transpose();
    }
  }
  return x;
}

// Sums consecutive groups of `group` columns; a trailing partial group is
// dropped.
Eigen::MatrixXcd presum_frames(const Eigen::MatrixXcd& data, std::size_t group) {
  if (group < 1) throw ConfigError("presum must be >= 1");
  if (group == 1) return data;
  const Eigen::Index g = static_cast<Eigen::Index>(group);
  const Eigen::Index cols = data.cols() / g;
  Eigen::MatrixXcd out(data.rows(), cols);
  for (Eigen::Index c = 0; c < cols; ++c) out.col(c) = data.middleCols(c * g, g).rowwise().sum();
  return out;
}

void check_music_shape(std::size_t dim, std::size_t snapshots, std::size_t sources) {
  if (sources < 1) throw ConfigError("MUSIC needs at least one assumed source");
  if (dim <= sources) {
    throw ConfigError("snapshot dimension " + std::to_string(dim) +
                      " leaves no noise subspace for " + std::to_string(sources) + " sources");
  }
  if (snapshots < sources + 1) {
    throw DataError("insufficient snapshots: " + std::to_string(snapshots) +
                    " cannot give a covariance of rank " + std::to_string(sources + 1));
  }
}

double residual_of(const Eigen::MatrixXcd& noise, const Eigen::VectorXcd& steering) {
  return (noise.adjoint() * steering).squaredNorm() / steering.squaredNorm();
}

std::vector<double> normalized_inverse(const std::vector<double>& residuals) {
  std::vector<double> out(residuals.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    out[i] = 1.0 / std::max(residuals[i], kResidualFloor);
    peak = std::max(peak, out[i]);
  }
  for (double& v : out) v /= peak;
  return out;
}

std::size_t argmax_of(const std::vector<double>& grid) {
  return static_cast<std::size_t>(std::max_element(grid.begin(), grid.end()) - grid.begin());
}

std::size_t clamp_sources(std::size_t sources, std::size_t dim) {
  return std::clamp<std::size_t>(sources, 1, dim - 1);
}

}  // namespace

PhaseRotation build_rotation(double v_hat, double a_hat, RotationShape shape,
                             const RadioConfig& radio, std::size_t window_frames,
                             std::size_t subcarrier) {
  if (window_frames < 2) throw ConfigError("rotation needs at least two frames");
  const bool antennas = shape == RotationShape::kAntennas;
  const std::size_t rows = antennas ? radio.num_ula_antennas : radio.num_subcarriers;
  if (antennas && subcarrier >= radio.num_subcarriers) {
    throw ConfigError("subcarrier index out of range");
  }
  const double dt = radio.frame_period_s();
  PhaseRotation rot;
  rot.v_hat = v_hat;
  rot.a_hat = a_hat;
  rot.shape = shape;
  rot.matrix.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(window_frames));
  for (std::size_t r = 0; r < rows; ++r) {
    const double f = radio.subcarrier_hz(antennas ? subcarrier : r);
    const double kc = 2.0 * kPi * f / kSpeedOfLight;
    for (std::size_t w = 0; w < window_frames; ++w) {
      const double wd = static_cast<double>(w);
      const double path = wd * (v_hat * dt + a_hat * dt * dt * wd / 2.0);
      rot.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(w)) =
          std::polar(1.0, kc * path);
    }
  }
  return rot;
}

Eigen::MatrixXcd rotate(const Eigen::MatrixXcd& data, const PhaseRotation& rotation) {
  if (data.rows() != rotation.matrix.rows() || data.cols() != rotation.matrix.cols()) {
    throw DataError("rotation is " + std::to_string(rotation.matrix.rows()) + "x" +
                    std::to_string(rotation.matrix.cols()) + " but data is " +
                    std::to_string(data.rows()) + "x" + std::to_string(data.cols()));
  }
  return data.cwiseProduct(rotation.matrix);
}

Eigen::MatrixXcd antenna_matrix(const ProductStream& stream, std::size_t subcarrier,
                                std::size_t window) {
  require_window(stream, window);
  if (subcarrier >= stream.num_subcarriers()) throw DataError("subcarrier index out of range");
  const std::size_t W = stream.window_frames;
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(stream.num_antennas()),
                       static_cast<Eigen::Index>(W));
  for (std::size_t m = 0; m < stream.num_antennas(); ++m) {
    const cd* src = stream.values.series(m, subcarrier) + window * W;
    for (std::size_t w = 0; w < W; ++w) {
      out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(w)) = src[w];
    }
  }
  return out;
}

Eigen::MatrixXcd subcarrier_matrix(const ProductStream& stream, std::size_t antenna,
                                   std::size_t window) {
  require_window(stream, window);
  if (antenna >= stream.num_antennas()) throw DataError("antenna index out of range");
  const std::size_t W = stream.window_frames;
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(stream.num_subcarriers()),
                       static_cast<Eigen::Index>(W));
  for (std::size_t k = 0; k < stream.num_subcarriers(); ++k) {
    const cd* src = stream.values.series(antenna, k) + window * W;
    for (std::size_t w = 0; w < W; ++w) {
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(w)) = src[w];
    }
  }
  return out;
}

double window_start_velocity(double mid_window_velocity, double acceleration,
                             std::size_t window_frames, double frame_period_s) {
  return mid_window_velocity - acceleration * window_centre_s(window_frames, frame_period_s);
}

std::size_t DoaSpectrum::argmax() const { return argmax_of(grid); }
std::size_t TofSpectrum::argmax() const { return argmax_of(grid); }

std::vector<std::size_t> spectrum_peaks(const std::vector<double>& grid, double threshold_frac) {
  std::vector<std::size_t> peaks;
  if (grid.empty()) return peaks;
  const double floor = threshold_frac * *std::max_element(grid.begin(), grid.end());
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (grid[i] < floor || grid[i] <= 0.0) continue;
    const bool left = i == 0 || grid[i] > grid[i - 1];
    const bool right = i + 1 == n || grid[i] > grid[i + 1];
    if (left && right && n > 1) peaks.push_back(i);
  }
  return peaks;
}

MusicSubspace music_subspace(const Eigen::MatrixXcd& covariance, std::size_t sources) {
  const auto dim = static_cast<std::size_t>(covariance.rows());
  if (covariance.cols() != covariance.rows()) throw DataError("covariance must be square");
  if (dim <= sources) throw ConfigError("no noise subspace left for the assumed sources");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(covariance);
  if (eig.info() != Eigen::Success) throw DataError("eigendecomposition failed");
  MusicSubspace out;
  // The solver sorts ascending; the noise subspace is the leading block.
  out.noise = eig.eigenvectors().leftCols(static_cast<Eigen::Index>(dim - sources));
  out.eigenvalues = eig.eigenvalues().reverse();
  const double top = std::max(out.eigenvalues(0), 0.0);
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
    if (out.eigenvalues(i) < 1e-12 * top) out.eigenvalues(i) = 0.0;
  }
  return out;
}

DoaSpectrum music_doa(const Eigen::MatrixXcd& data, double freq_hz, const RadioConfig& radio,
                      const MusicOptions& options) {
  return WidebandDoa({DoaInput{data, freq_hz}}, radio, options, 0).spectrum();
}

WidebandDoa::WidebandDoa(const std::vector<DoaInput>& inputs, const RadioConfig& radio,
                         const MusicOptions& options, std::size_t band_size)
    : spacing_m_(radio.antenna_spacing_m()),
      d_over_lambda_(radio.antenna_spacing_wavelengths) {
  if (inputs.empty()) throw DataError("DoA estimation needs at least one input matrix");
  antennas_ = static_cast<std::size_t>(inputs.front().data.rows());
  temporal_len_ = options.temporal_len;
  const auto frames = static_cast<std::size_t>(inputs.front().data.cols());
  if (antennas_ < 2) throw DataError("DoA estimation needs at least two antennas");
  const std::size_t samples = options.presum == 0 ? 0 : frames / options.presum;
  if (temporal_len_ < 1 || temporal_len_ > samples) {
    throw ConfigError("temporal_len must lie in [1, W / presum]");
  }
  const std::size_t dim = antennas_ * temporal_len_;
  const std::size_t per_input = samples - temporal_len_ + 1;
  const std::size_t band = band_size == 0 ? inputs.size() : band_size;

  for (std::size_t start = 0; start < inputs.size(); start += band) {
    const std::size_t stop = std::min(start + band, inputs.size());
    check_music_shape(dim, per_input * (stop - start), options.assume_sources);
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                                  static_cast<Eigen::Index>(dim));
    double freq = 0.0;
    for (std::size_t i = start; i < stop; ++i) {
      const DoaInput& in = inputs[i];
      if (static_cast<std::size_t>(in.data.rows()) != antennas_ ||
          static_cast<std::size_t>(in.data.cols()) != frames) {
        throw DataError("DoA inputs must share one M x W shape");
      }
      const Eigen::MatrixXcd x =
          temporal_snapshots(presum_frames(in.data, options.presum), temporal_len_);
      cov.noalias() += x * x.adjoint();
      freq += in.freq_hz;
    }
    cov /= static_cast<double>(per_input * (stop - start));
    bands_.push_back({music_subspace(cov, options.assume_sources).noise,
                      freq / static_cast<double>(stop - start)});
  }
}

double WidebandDoa::residual(double theta_deg) const {
  const double s = std::sin(deg2rad(theta_deg));
  const auto len = static_cast<Eigen::Index>(temporal_len_);
  Eigen::VectorXcd steering(static_cast<Eigen::Index>(antennas_) * len);
  double total = 0.0;
  for (const Band& b : bands_) {
    const double kc = 2.0 * kPi * b.freq_hz / kSpeedOfLight;
    for (std::size_t m = 0; m < antennas_; ++m) {
      const cd phase = std::polar(1.0, -kc * static_cast<double>(m) * spacing_m_ * s);
      steering.segment(static_cast<Eigen::Index>(m) * len, len).setConstant(phase);
    }
    total += residual_of(b.noise, steering);
  }
  return total / static_cast<double>(bands_.size());
}

DoaSpectrum WidebandDoa::spectrum() const {
  std::vector<double> res(DoaSpectrum::kBins);
  for (std::size_t i = 0; i < res.size(); ++i) res[i] = residual(DoaSpectrum::theta_deg(i));
  DoaSpectrum out;
  out.grid = normalized_inverse(res);
  out.d_over_lambda = d_over_lambda_;
  return out;
}

std::vector<double> alias_set(double theta_deg, double d_over_lambda) {
  if (!(std::abs(theta_deg) <= 90.0)) throw ConfigError("|theta_deg| must be <= 90");
  if (!(d_over_lambda > 0.0)) throw ConfigError("d_over_lambda must be positive");
  const double s = std::sin(deg2rad(theta_deg));
  const double period = 1.0 / d_over_lambda;
  std::vector<double> out;
  const int lo = static_cast<int>(std::floor((-1.0 - s) / period)) - 1;
  const int hi = static_cast<int>(std::ceil((1.0 - s) / period)) + 1;
  for (int n = lo; n <= hi; ++n) {
    if (n == 0) {
      out.push_back(theta_deg);
      continue;
    }
    const double sn = s + n * period;
    if (sn < -1.0 - 1e-12 || sn > 1.0 + 1e-12) continue;
    out.push_back(std::asin(std::clamp(sn, -1.0, 1.0)) * 180.0 / kPi);
  }
  std::sort(out.begin(), out.end());
  return out;
}

TofSpectrum music_tof(const std::vector<Eigen::MatrixXcd>& data, const RadioConfig& radio,
                      const TofOptions& options) {
  if (data.empty()) throw DataError("ToF estimation needs at least one input matrix");
  const auto K = static_cast<std::size_t>(data.front().rows());
  const auto W = static_cast<std::size_t>(data.front().cols());
  if (K < 4) throw DataError("ToF estimation needs at least four subcarriers");
  const std::size_t sub = std::min(options.subarray_len, K);
  const std::size_t len = options.temporal_len;
  if (sub < 2) throw ConfigError("subarray_len must be >= 2");
  const std::size_t samples = options.presum == 0 ? 0 : W / options.presum;
  if (len < 1 || len > samples) throw ConfigError("temporal_len must lie in [1, W / presum]");
  const std::size_t dim = sub * len;
  const std::size_t per_matrix = (K - sub + 1) * (samples - len + 1);
  check_music_shape(dim, per_matrix * data.size(), options.assume_sources);

  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim));
  for (const Eigen::MatrixXcd& d : data) {
    if (static_cast<std::size_t>(d.rows()) != K || static_cast<std::size_t>(d.cols()) != W) {
      throw DataError("ToF inputs must share one K x W shape");
    }
    const Eigen::MatrixXcd summed = presum_frames(d, options.presum);
    for (std::size_t p = 0; p + sub <= K; ++p) {
      const Eigen::MatrixXcd block = summed.middleRows(static_cast<Eigen::Index>(p),
                                                       static_cast<Eigen::Index>(sub));
      const Eigen::MatrixXcd x = temporal_snapshots(block, len);
      cov.noalias() += x * x.adjoint();
    }
  }
  cov /= static_cast<double>(per_matrix * data.size());
  const Eigen::MatrixXcd noise = music_subspace(cov, options.assume_sources).noise;

  TofSpectrum out;
  out.tof_period_s = radio.tof_period_s();
  const double df = radio.subcarrier_spacing_hz();
  std::vector<double> res(TofSpectrum::kBins);
  Eigen::VectorXcd steering(static_cast<Eigen::Index>(dim));
  const auto lag = static_cast<Eigen::Index>(len);
  for (std::size_t b = 0; b < res.size(); ++b) {
    const double tau = out.tau_s(b);
    for (std::size_t i = 0; i < sub; ++i) {
      steering.segment(static_cast<Eigen::Index>(i) * lag, lag)
          .setConstant(std::polar(1.0, -2.0 * kPi * static_cast<double>(i) * df * tau));
    }
    res[b] = residual_of(noise, steering);
  }
  out.grid = normalized_inverse(res);
  return out;
}

TofSpectrum music_tof(const Eigen::MatrixXcd& data, const RadioConfig& radio,
                      const TofOptions& options) {
  return music_tof(std::vector<Eigen::MatrixXcd>{data}, radio, options);
}

namespace {

struct Refined {
  double theta = 0.0;
  double residual = 0.0;
};

// Finest residual minimum within +-1.5 deg of a candidate direction.
Refined refine(const WidebandDoa& doa, double centre) {
  Refined best{centre, doa.residual(centre)};
  for (int i = -30; i <= 30; ++i) {
    const double theta = std::clamp(centre + 0.05 * i, -90.0, 90.0);
    const double r = doa.residual(theta);
    if (r < best.residual) best = {theta, r};
  }
  return best;
}

std::vector<DoaInput> rotated_antenna_inputs(const ProductStream& stream, std::size_t window,
                                             const RadioConfig& radio, double v_start,
                                             double accel) {
  std::vector<DoaInput> inputs;
  inputs.reserve(stream.num_subcarriers());
  for (std::size_t k = 0; k < stream.num_subcarriers(); ++k) {
    const PhaseRotation rot = build_rotation(v_start, accel, RotationShape::kAntennas, radio,
                                             stream.window_frames, k);
    inputs.push_back({rotate(antenna_matrix(stream, k, window), rot), radio.subcarrier_hz(k)});
  }
  return inputs;
}

}  // namespace

std::vector<PeakEstimate> analyze_peaks(const ProductStream& stream, std::size_t window,
                                        const std::vector<VaPeak>& peaks,
                                        const RadioConfig& radio,
                                        const EstimatorOptions& options) {
  require_window(stream, window);
  if (stream.num_antennas() != radio.num_ula_antennas ||
      stream.num_subcarriers() != radio.num_subcarriers) {
    throw DataError("stream shape does not match the radio configuration");
  }
  const ProductStream* ref = options.reference.stream;
  if (ref != nullptr) require_window(*ref, window);

  const std::size_t W = stream.window_frames;
  const double dt = stream.frame_period_s;
  MusicOptions doa_opts = options.doa;
  TofOptions tof_opts = options.tof;
  if (options.sources_from_peaks && !peaks.empty()) {
    doa_opts.assume_sources = peaks.size();
    tof_opts.assume_sources = peaks.size();
  }
  doa_opts.assume_sources =
      clamp_sources(doa_opts.assume_sources, radio.num_ula_antennas * doa_opts.temporal_len);
  tof_opts.assume_sources = clamp_sources(
      tof_opts.assume_sources,
      std::min(tof_opts.subarray_len, radio.num_subcarriers) * tof_opts.temporal_len);

  std::vector<PeakEstimate> out;
  out.reserve(peaks.size());
  for (const VaPeak& peak : peaks) {
    PeakEstimate est;
    est.peak = peak;
    est.window = window;
    const double v_start = window_start_velocity(peak.velocity, peak.acceleration, W, dt);

    const std::vector<DoaInput> inputs =
        rotated_antenna_inputs(stream, window, radio, v_start, peak.acceleration);
    const WidebandDoa pooled(inputs, radio, doa_opts, 0);
    est.ambiguous = pooled.spectrum();
    est.ambiguous.v_hat_tag = peak.velocity;
    const WidebandDoa wide(inputs, radio, doa_opts, options.band_size);
    est.clear = wide.spectrum();
    est.clear.v_hat_tag = peak.velocity;

    const double top = DoaSpectrum::theta_deg(est.ambiguous.argmax());
    const std::vector<double> candidates = alias_set(top, radio.antenna_spacing_wavelengths);
    if (candidates.size() == 1) {
      est.resolution = DoaResolution::kNone;
      est.point.phi_hat = refine(pooled, top).theta;
    } else if (ref != nullptr) {
      est.resolution = DoaResolution::kReferenceSpacing;
      const WidebandDoa half(rotated_antenna_inputs(*ref, window, options.reference.radio,
                                                    v_start, peak.acceleration),
                             options.reference.radio, doa_opts, 0);
      double best = 0.0;
      double best_residual = 0.0;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double r = refine(half, candidates[i]).residual;
        if (i == 0 || r < best_residual) {
          best = candidates[i];
          best_residual = r;
        }
      }
      est.point.phi_hat = refine(wide, best).theta;
    } else {
      est.resolution = DoaResolution::kWideband;
      Refined best;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Refined r = refine(wide, candidates[i]);
        if (i == 0 || r.residual < best.residual) best = r;
      }
      est.point.phi_hat = best.theta;
    }

    std::vector<Eigen::MatrixXcd> tof_inputs;
    const PhaseRotation rot =
        build_rotation(v_start, peak.acceleration, RotationShape::kSubcarriers, radio, W);
    for (std::size_t m = 0; m < stream.num_antennas(); ++m) {
      tof_inputs.push_back(rotate(subcarrier_matrix(stream, m, window), rot));
    }
    est.tof = music_tof(tof_inputs, radio, tof_opts);
    est.tof.v_hat_tag = peak.velocity;

    est.point.v_hat = peak.velocity;
    est.point.tau_hat = est.tof.tau_s(est.tof.argmax());
    out.push_back(std::move(est));
  }
  return out;
}

void apply_clear_spectrum(PeakEstimate& estimate, const DoaSpectrum& clear) {
  if (clear.grid.size() != DoaSpectrum::kBins) {
    throw BoundaryError("clear DoA spectrum has " + std::to_string(clear.grid.size()) +
                        " bins, expected 181");
  }
  estimate.clear = clear;
  estimate.clear.v_hat_tag = estimate.peak.velocity;
  estimate.resolution = DoaResolution::kExternal;
  estimate.point.phi_hat = DoaSpectrum::theta_deg(clear.argmax());
}

std::vector<ParameterPoint> estimate_parameters(const ProductStream& stream, std::size_t window,
                                                const std::vector<VaPeak>& peaks,
                                                const RadioConfig& radio,
                                                const EstimatorOptions& options,
                                                const DoaDisambiguator& disambiguator) {
  std::vector<PeakEstimate> estimates = analyze_peaks(stream, window, peaks, radio, options);
  if (disambiguator && !estimates.empty() && radio.antenna_spacing_wavelengths > 0.5) {
    std::vector<DoaSpectrum> ambiguous;
    for (const PeakEstimate& e : estimates) ambiguous.push_back(e.ambiguous);
    const std::vector<DoaSpectrum> clear = disambiguator(ambiguous);
    if (clear.size() != estimates.size()) {
      throw BoundaryError("disambiguator returned " + std::to_string(clear.size()) +
                          " spectra for " + std::to_string(estimates.size()) + " requests");
    }
    for (std::size_t i = 0; i < estimates.size(); ++i) apply_clear_spectrum(estimates[i], clear[i]);
  }
  std::vector<ParameterPoint> points;
  for (const PeakEstimate& e : estimates) points.push_back(e.point);
  return points;
}

}  // namespace ghfd
