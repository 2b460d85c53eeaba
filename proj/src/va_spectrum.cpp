#include "ghfd/va_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/FFT>

namespace ghfd {
namespace {

constexpr int kSincHalfTaps = 4;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

// Lanczos-windowed sinc restricted to [lo, hi], weights renormalised so a
// constant series is reproduced exactly up to the support edges.
cd interpolate_sinc(const cd* row, std::ptrdiff_t lo, std::ptrdiff_t hi, double x) {
  const auto base = static_cast<std::ptrdiff_t>(std::floor(x));
  if (static_cast<double>(base) == x) return row[base];
  cd acc = 0.0;
  double weight_sum = 0.0;
  for (std::ptrdiff_t n = base - kSincHalfTaps + 1; n <= base + kSincHalfTaps; ++n) {
    if (n < lo || n > hi) continue;
    const double d = x - static_cast<double>(n);
    const double w = sinc(d) * sinc(d / kSincHalfTaps);
    acc += w * row[n];
    weight_sum += w;
  }
  return weight_sum == 0.0 ? cd(0.0) : acc / weight_sum;
}

cd interpolate_linear(const cd* row, std::ptrdiff_t hi, double x) {
  const auto base = static_cast<std::ptrdiff_t>(std::floor(x));
  const double frac = x - static_cast<double>(base);
  if (frac == 0.0 || base + 1 > hi) return row[base];
  return (1.0 - frac) * row[base] + frac * row[base + 1];
}

std::size_t snap_half_lag(double t_d_s, double frame_period_s) {
  if (!(t_d_s > 0.0)) throw ConfigError("keystone t_d must be positive");
  const double half_lags = t_d_s / (2.0 * frame_period_s);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(half_lags)));
}

std::size_t nearest_index(double x, double lo, double step, std::size_t n) {
  const double idx = std::round((x - lo) / step);
  if (idx <= 0.0) return 0;
  if (idx >= static_cast<double>(n - 1)) return n - 1;
  return static_cast<std::size_t>(idx);
}

// A fractional FFT bin as its two neighbours and the weight of the upper one.
struct BinBlend {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double frac = 0.0;
};

BinBlend blend_bin(double bin, std::size_t n) {
  const double base = std::floor(bin);
  const auto nn = static_cast<long long>(n);
  const auto wrap = [nn](long long i) { return static_cast<std::size_t>(((i % nn) + nn) % nn); };
  const auto b = static_cast<long long>(base);
  return {wrap(b), wrap(b + 1), bin - base};
}

}  // namespace

KeystoneParams default_keystone_params(std::size_t window_frames, double frame_period_s) {
  KeystoneParams p;
  p.t_d_s = static_cast<double>(window_frames) * frame_period_s / 4.0;
  return p;
}

std::size_t VaAxes::nearest_v(double v) const { return nearest_index(v, v_min, v_step(), num_v); }
std::size_t VaAxes::nearest_a(double a) const { return nearest_index(a, a_min, a_step(), num_a); }

SeriesWindow series_window(const ProductStream& stream, std::size_t antenna,
                           std::size_t subcarrier, std::size_t window, const RadioConfig& radio) {
  if (antenna >= stream.num_antennas() || subcarrier >= stream.num_subcarriers()) {
    throw ConfigError("series index outside the stream");
  }
  const std::size_t W = stream.window_frames == 0 ? stream.num_frames() : stream.window_frames;
  const std::size_t start = window * W;
  if (start + W > stream.num_frames()) {
    throw ConfigError("window " + std::to_string(window) + " is outside the stream");
  }
  SeriesWindow s;
  const cd* src = stream.values.series(antenna, subcarrier) + start;
  s.samples.assign(src, src + W);
  s.frame_period_s = stream.frame_period_s;
  s.freq_hz = radio.subcarrier_hz(subcarrier);
  s.dc_removed = stream.dc_removed;
  return s;
}

AcfMatrix autocorrelate(const SeriesWindow& series, const KeystoneParams& params) {
  if (!series.dc_removed) {
    throw DataError("autocorrelation needs a DC-nulled series; run remove_static first");
  }
  const std::size_t W = series.samples.size();
  if (W < 8) throw ConfigError("autocorrelation needs at least 8 frames");
  if (!(series.frame_period_s > 0.0)) throw ConfigError("frame period must be positive");

  const std::size_t l0 = snap_half_lag(params.t_d_s, series.frame_period_s);
  const std::size_t l_max = (W - 1) / 2;
  if (l0 > l_max) {
    throw ConfigError("t_d leaves no valid lag inside a " + std::to_string(W) + "-frame window");
  }

  AcfMatrix acf;
  acf.first_half_lag = l0;
  acf.frame_period_s = series.frame_period_s;
  acf.freq_hz = series.freq_hz;
  acf.values = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(l_max - l0 + 1),
                                      static_cast<Eigen::Index>(W));
  const cd* s = series.samples.data();
  for (std::size_t l = l0; l <= l_max; ++l) {
    const auto row = static_cast<Eigen::Index>(l - l0);
    for (std::size_t n = l; n + l < W; ++n) {
      acf.values(row, static_cast<Eigen::Index>(n)) = s[n + l] * std::conj(s[n - l]);
    }
  }
  return acf;
}

KeystonedMatrix keystone(const AcfMatrix& acf, const KeystoneParams& params) {
  if (params.z == 0.0 || !std::isfinite(params.z)) throw ConfigError("keystone z must be non-zero");
  const std::size_t W = acf.num_frames();
  const std::size_t l0 = acf.first_half_lag;
  const std::size_t rows = acf.num_lags();
  const double centre = 0.5 * static_cast<double>(W - 1);

  // Lag l natively samples g at spacing z * 2l * dt^2 around the window
  // centre; the output grid uses the shortest lag's spacing, so column j maps
  // to frame x = centre + (p_j - centre) * l0 / l with p_j = p_lo + j.
  double reach = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double l = static_cast<double>(l0 + r);
    reach = std::max(reach, (centre - l) * l / static_cast<double>(l0));
  }
  const double p_lo = std::ceil(centre - reach);
  const auto cols = static_cast<std::size_t>(std::floor(centre + reach) - p_lo) + 1;

  KeystonedMatrix out;
  out.first_half_lag = l0;
  out.frame_period_s = acf.frame_period_s;
  out.freq_hz = acf.freq_hz;
  out.z = params.z;
  out.g_step = params.z * 2.0 * static_cast<double>(l0) * acf.frame_period_s * acf.frame_period_s;
  out.g_origin = (p_lo - centre) * out.g_step;
  out.values = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));

  std::vector<cd> row_buf(W);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t l = l0 + r;
    const auto lo = static_cast<std::ptrdiff_t>(l);
    const auto hi = static_cast<std::ptrdiff_t>(W - 1 - l);
    for (std::size_t n = 0; n < W; ++n) {
      row_buf[n] = acf.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n));
    }
    const double scale = static_cast<double>(l0) / static_cast<double>(l);
    for (std::size_t j = 0; j < cols; ++j) {
      double x = centre + (p_lo + static_cast<double>(j) - centre) * scale;
      // Snap round-off so lattice points stay exact.
      const double nearest = std::round(x);
      if (std::abs(x - nearest) < 1e-9) x = nearest;
      if (x < static_cast<double>(lo) || x > static_cast<double>(hi)) continue;
      const cd value = params.interpolation == Interpolation::kSinc
                           ? interpolate_sinc(row_buf.data(), lo, hi, x)
                           : interpolate_linear(row_buf.data(), hi, x);
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = value;
    }
  }
  return out;
}

VaSpectrum va_transform(const KeystonedMatrix& ks, const VaAxes& axes,
                        const TransformOptions& options) {
  if (!ks.values.allFinite()) throw DataError("keystoned matrix contains non-finite values");
  if (axes.num_v < 2 || axes.num_a < 2) throw ConfigError("V-A axes need at least two points");

  const auto L = static_cast<Eigen::Index>(ks.num_lags());
  const auto G = ks.values.cols();
  const auto Nv = static_cast<Eigen::Index>(axes.num_v);
  const auto Na = static_cast<Eigen::Index>(axes.num_a);
  const double k_over_c = 2.0 * kPi * ks.freq_hz / kSpeedOfLight;

  VaSpectrum spec;
  spec.axes = axes;

  if (options.method == TransformMethod::kGridDft) {
    // Auto terms carry exp(-j 2 pi f/c (v u + a g / z)); correlate with the
    // conjugate so the peak lands on (+v, +a).
    Eigen::MatrixXcd accel_kernel(G, Na);
    for (Eigen::Index j = 0; j < G; ++j) {
      const double g = ks.g(static_cast<std::size_t>(j));
      for (Eigen::Index c = 0; c < Na; ++c) {
        accel_kernel(j, c) = std::polar(1.0, k_over_c * axes.a(static_cast<std::size_t>(c)) * g / ks.z);
      }
    }
    Eigen::MatrixXcd velocity_kernel(Nv, L);
    for (Eigen::Index r = 0; r < Nv; ++r) {
      for (Eigen::Index i = 0; i < L; ++i) {
        velocity_kernel(r, i) =
            std::polar(1.0, k_over_c * axes.v(static_cast<std::size_t>(r)) *
                                ks.lag_s(static_cast<std::size_t>(i)));
      }
    }
    const Eigen::MatrixXcd partial = ks.values * accel_kernel;
    spec.grid = (velocity_kernel * partial).cwiseAbs();
    return spec;
  }

  if (options.pad_factor < 4) throw ConfigError("FFT zero padding must be at least 4x");
  const auto n_lag = static_cast<std::size_t>(L) * options.pad_factor;
  const auto n_g = static_cast<std::size_t>(G) * options.pad_factor;
  Eigen::FFT<double> fft;

  // FFT along g for every lag, then along lag for every g bin.
  Eigen::MatrixXcd spectrum_g(L, static_cast<Eigen::Index>(n_g));
  std::vector<cd> in(n_g), out;
  for (Eigen::Index i = 0; i < L; ++i) {
    std::fill(in.begin(), in.end(), cd(0.0));
    for (Eigen::Index j = 0; j < G; ++j) in[static_cast<std::size_t>(j)] = ks.values(i, j);
    fft.fwd(out, in);
    for (std::size_t q = 0; q < n_g; ++q) spectrum_g(i, static_cast<Eigen::Index>(q)) = out[q];
  }

  // Bins are only needed where the grid lands.
  std::vector<BinBlend> a_bins(axes.num_a), v_bins(axes.num_v);
  for (std::size_t c = 0; c < axes.num_a; ++c) {
    a_bins[c] = blend_bin(-ks.freq_hz * axes.a(c) * ks.g_step * static_cast<double>(n_g) /
                             (kSpeedOfLight * ks.z),
                         n_g);
  }
  const double lag_step = 2.0 * ks.frame_period_s;
  for (std::size_t r = 0; r < axes.num_v; ++r) {
    v_bins[r] = blend_bin(-ks.freq_hz * axes.v(r) * lag_step * static_cast<double>(n_lag) /
                             kSpeedOfLight,
                         n_lag);
  }

  spec.grid = Eigen::MatrixXd::Zero(Nv, Na);
  std::vector<cd> col_in(n_lag), col_out;
  for (std::size_t c = 0; c < axes.num_a; ++c) {
    std::fill(col_in.begin(), col_in.end(), cd(0.0));
    for (Eigen::Index i = 0; i < L; ++i) {
      const BinBlend& b = a_bins[c];
      col_in[static_cast<std::size_t>(i)] =
          (1.0 - b.frac) * spectrum_g(i, static_cast<Eigen::Index>(b.lo)) +
          b.frac * spectrum_g(i, static_cast<Eigen::Index>(b.hi));
    }
    fft.fwd(col_out, col_in);
    for (std::size_t r = 0; r < axes.num_v; ++r) {
      const BinBlend& b = v_bins[r];
      spec.grid(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::abs((1.0 - b.frac) * col_out[b.lo] + b.frac * col_out[b.hi]);
    }
  }
  return spec;
}

VaSpectrum va_spectrum(const SeriesWindow& series, const KeystoneParams& params,
                       const VaAxes& axes, const TransformOptions& options) {
  return va_transform(keystone(autocorrelate(series, params), params), axes, options);
}

VaSpectrum fused_va_spectrum(const ProductStream& stream, std::size_t window,
                             const RadioConfig& radio, const FusionOptions& options) {
  if (!stream.dc_removed) throw DataError("V-A fusion needs a DC-nulled stream");
  if (options.subcarrier_stride < 1) throw ConfigError("subcarrier_stride must be >= 1");
  const KeystoneParams params = default_keystone_params(stream.window_frames, stream.frame_period_s);

  VaSpectrum fused;
  fused.axes = options.axes;
  fused.grid = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(options.axes.num_v),
                                     static_cast<Eigen::Index>(options.axes.num_a));
  std::size_t count = 0;
  for (std::size_t m = 0; m < stream.num_antennas(); ++m) {
    for (std::size_t k = 0; k < stream.num_subcarriers(); k += options.subcarrier_stride) {
      const SeriesWindow s = series_window(stream, m, k, window, radio);
      fused.grid += va_spectrum(s, params, options.axes, options.transform).grid;
      ++count;
    }
  }
  fused.grid /= static_cast<double>(count);
  fused.source.window = window;
  fused.source.series_fused = count;
  return fused;
}

std::vector<VaPeak> detect_peaks(const VaSpectrum& spectrum, double threshold_frac) {
  if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) {
    throw ConfigError("threshold_frac must lie in (0, 1)");
  }
  const Eigen::MatrixXd& g = spectrum.grid;
  const Eigen::Index rows = g.rows();
  const Eigen::Index cols = g.cols();
  if (rows == 0 || cols == 0) return {};
  const double floor = threshold_frac * g.maxCoeff();

  std::vector<VaPeak> candidates;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double v = g(r, c);
      if (!(v > floor)) continue;
      bool strict_max = true;
      for (Eigen::Index dr = -1; dr <= 1 && strict_max; ++dr) {
        for (Eigen::Index dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const Eigen::Index rr = r + dr;
          const Eigen::Index cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
          if (!(v > g(rr, cc))) {
            strict_max = false;
            break;
          }
        }
      }
      if (!strict_max) continue;
      VaPeak p;
      p.row = static_cast<std::size_t>(r);
      p.col = static_cast<std::size_t>(c);
      p.magnitude = v;
      p.velocity = spectrum.axes.v(p.row);
      p.acceleration = spectrum.axes.a(p.col);
      candidates.push_back(p);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const VaPeak& x, const VaPeak& y) { return x.magnitude > y.magnitude; });

  std::vector<VaPeak> accepted;
  for (const VaPeak& p : candidates) {
    const bool isolated = std::none_of(accepted.begin(), accepted.end(), [&](const VaPeak& q) {
      const auto dr = static_cast<long long>(p.row) - static_cast<long long>(q.row);
      const auto dc = static_cast<long long>(p.col) - static_cast<long long>(q.col);
      return std::max(std::llabs(dr), std::llabs(dc)) < 2;
    });
    if (isolated) accepted.push_back(p);
  }
  return accepted;
}

}  // namespace ghfd
