#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "ghfd/common.hpp"
#include "ghfd/preprocess.hpp"
#include "ghfd/radio.hpp"

namespace ghfd {

enum class Interpolation { kSinc, kLinear };

// t_d is snapped to the even-frame lag lattice: the autocorrelation uses
// sample pairs (n + l, n - l), so every lag tau + t_d is 2 * l frames.
struct KeystoneParams {
  double t_d_s = 0.0;
  double z = 1.0;
  Interpolation interpolation = Interpolation::kSinc;
};

// t_d = W * dt / 4, z = 1, 8-tap windowed sinc.
KeystoneParams default_keystone_params(std::size_t window_frames, double frame_period_s);

// Offset of the window centre from its first frame, (W - 1) dt / 2.
inline double window_centre_s(std::size_t window_frames, double frame_period_s) {
  return 0.5 * static_cast<double>(window_frames - 1) * frame_period_s;
}

// One (m, k) series over a single window, together with what the transform
// needs to map phases to physical units.
struct SeriesWindow {
  std::vector<cd> samples;
  double frame_period_s = 0.0;
  double freq_hz = 0.0;
  bool dc_removed = false;
};

SeriesWindow series_window(const ProductStream& stream, std::size_t antenna,
                           std::size_t subcarrier, std::size_t window, const RadioConfig& radio);

// Symmetric instantaneous autocorrelation s(n + l) conj(s(n - l)).
// Rows are lags l = first_half_lag + i (tau + t_d = 2 l dt); columns are the
// pair-centre frame n. Pairs that leave the window are zero. Time Delta t is
// measured from the window centre, (n - (W - 1) / 2) dt, so the spectrum
// reports the velocity at mid-window.
struct AcfMatrix {
  Eigen::MatrixXcd values;
  std::size_t first_half_lag = 0;
  double frame_period_s = 0.0;
  double freq_hz = 0.0;

  std::size_t num_lags() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_frames() const { return static_cast<std::size_t>(values.cols()); }
  std::size_t half_lag(std::size_t row) const { return first_half_lag + row; }
  double lag_s(std::size_t row) const { return 2.0 * static_cast<double>(half_lag(row)) * frame_period_s; }
};

AcfMatrix autocorrelate(const SeriesWindow& series, const KeystoneParams& params);

// acf(g / (z (tau + t_d)), tau) on a uniform grid g_j = g_origin + j * g_step.
// The step equals the native sample spacing of the shortest lag, so that lag
// is reproduced without interpolation.
struct KeystonedMatrix {
  Eigen::MatrixXcd values;  // lags x g samples
  std::size_t first_half_lag = 0;
  double frame_period_s = 0.0;
  double freq_hz = 0.0;
  double z = 1.0;
  double g_step = 0.0;    // s^2 (scaled by z)
  double g_origin = 0.0;  // g of column 0

  std::size_t num_lags() const { return static_cast<std::size_t>(values.rows()); }
  double lag_s(std::size_t row) const {
    return 2.0 * static_cast<double>(first_half_lag + row) * frame_period_s;
  }
  double g(std::size_t col) const { return g_origin + static_cast<double>(col) * g_step; }
};

KeystonedMatrix keystone(const AcfMatrix& acf, const KeystoneParams& params);

struct VaAxes {
  double v_min = -2.0;
  double v_max = 2.0;
  std::size_t num_v = 81;
  double a_min = -3.0;
  double a_max = 3.0;
  std::size_t num_a = 81;

  double v_step() const { return (v_max - v_min) / static_cast<double>(num_v - 1); }
  double a_step() const { return (a_max - a_min) / static_cast<double>(num_a - 1); }
  double v(std::size_t row) const { return v_min + static_cast<double>(row) * v_step(); }
  double a(std::size_t col) const { return a_min + static_cast<double>(col) * a_step(); }
  std::size_t nearest_v(double v) const;
  std::size_t nearest_a(double a) const;
};

struct SpectrumSource {
  std::size_t window = 0;
  int antenna = -1;     // -1 when fused over antennas
  int subcarrier = -1;  // -1 when fused over subcarriers
  std::size_t series_fused = 1;
};

// Velocity-acceleration magnitude grid, rows = velocity, cols = acceleration.
// Velocity is the path-length rate at the centre of the source window.
struct VaSpectrum {
  Eigen::MatrixXd grid;
  VaAxes axes;
  SpectrumSource source;
};

enum class TransformMethod {
  // The zero-padded 2D DFT evaluated exactly at the grid coordinates.
  kGridDft,
  // Radix FFT with `pad_factor` zero padding, linearly interpolated onto the grid.
  kPaddedFft,
};

struct TransformOptions {
  TransformMethod method = TransformMethod::kGridDft;
  std::size_t pad_factor = 4;
};

// 2D Fourier magnitude over (g, lag). The axis is flipped so a target with
// mid-window path-length rate v and acceleration a appears at (v, a).
VaSpectrum va_transform(const KeystonedMatrix& keystoned, const VaAxes& axes,
                        const TransformOptions& options = {});

VaSpectrum va_spectrum(const SeriesWindow& series, const KeystoneParams& params,
                       const VaAxes& axes = {}, const TransformOptions& options = {});

struct FusionOptions {
  std::size_t subcarrier_stride = 8;
  VaAxes axes;
  TransformOptions transform;
};

// Magnitude average over every antenna and every `subcarrier_stride`-th
// subcarrier for one window of a DC-nulled stream.
VaSpectrum fused_va_spectrum(const ProductStream& stream, std::size_t window,
                             const RadioConfig& radio, const FusionOptions& options = {});

struct VaPeak {
  double velocity = 0.0;
  double acceleration = 0.0;
  double magnitude = 0.0;
  std::size_t row = 0;
  std::size_t col = 0;
};

// Strict 3x3 local maxima above threshold_frac * global max, at least two
// cells (Chebyshev) from any stronger accepted peak; strongest first.
std::vector<VaPeak> detect_peaks(const VaSpectrum& spectrum, double threshold_frac);

}  // namespace ghfd
