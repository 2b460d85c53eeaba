#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ghfd/common.hpp"
#include "ghfd/preprocess.hpp"
#include "ghfd/radio.hpp"
#include "ghfd/va_spectrum.hpp"

namespace ghfd {

enum class RotationShape { kAntennas, kSubcarriers };

// Unit-magnitude de-chirp. Entry (row, w) is
// exp(+j 2 pi f_row [w (v dt / c + a dt^2 w / (2 c))]), where v is the rate at
// w = 0. For kAntennas every row uses the frequency of `subcarrier`.
struct PhaseRotation {
  Eigen::MatrixXcd matrix;
  double v_hat = 0.0;
  double a_hat = 0.0;
  RotationShape shape = RotationShape::kAntennas;
};

PhaseRotation build_rotation(double v_hat, double a_hat, RotationShape shape,
                             const RadioConfig& radio, std::size_t window_frames,
                             std::size_t subcarrier = 0);

// data .* rotation; throws DataError when the shapes differ.
Eigen::MatrixXcd rotate(const Eigen::MatrixXcd& data, const PhaseRotation& rotation);

// M x W slice of one window at a fixed subcarrier, and K x W at a fixed antenna.
Eigen::MatrixXcd antenna_matrix(const ProductStream& stream, std::size_t subcarrier,
                                std::size_t window);
Eigen::MatrixXcd subcarrier_matrix(const ProductStream& stream, std::size_t antenna,
                                   std::size_t window);

// A VA peak reports the rate at mid-window; rotations want the rate at the
// first frame of the window.
double window_start_velocity(double mid_window_velocity, double acceleration,
                             std::size_t window_frames, double frame_period_s);

struct DoaSpectrum {
  std::vector<double> grid;  // 181 bins, -90..90 deg in 1 deg steps
  double d_over_lambda = 1.0;
  double v_hat_tag = 0.0;

  static constexpr std::size_t kBins = 181;
  static double theta_deg(std::size_t bin) { return -90.0 + static_cast<double>(bin); }
  std::size_t argmax() const;
};

struct TofSpectrum {
  std::vector<double> grid;  // 256 bins over [0, 1 / subcarrier spacing)
  double tof_period_s = 0.0;
  double v_hat_tag = 0.0;

  static constexpr std::size_t kBins = 256;
  double tau_s(std::size_t bin) const {
    return tof_period_s * static_cast<double>(bin) / static_cast<double>(kBins);
  }
  std::size_t argmax() const;
};

// Strict local maxima above threshold_frac * max, the two end bins included
// when they exceed their single neighbour. Ascending bin order.
std::vector<std::size_t> spectrum_peaks(const std::vector<double>& grid, double threshold_frac);

// Noise subspace of a Hermitian covariance: eigenvectors of the smallest
// (dimension - sources) eigenvalues. Eigenvalues are descending, and values
// below 1e-12 * max are clamped to zero.
struct MusicSubspace {
  Eigen::MatrixXcd noise;
  Eigen::VectorXd eigenvalues;
};

MusicSubspace music_subspace(const Eigen::MatrixXcd& covariance, std::size_t sources);

// Snapshots for the DoA search slide a `temporal_len`-sample window over time;
// each snapshot stacks M * temporal_len entries and the steering vector is
// spatial (x) ones, i.e. the velocity coordinate is fixed at zero. Groups of
// `presum` frames are summed first: the rotated target sits at zero Doppler,
// so this integrates it coherently while keeping the covariance small.
struct MusicOptions {
  std::size_t temporal_len = 10;
  std::size_t presum = 1;
  std::size_t assume_sources = 1;
};

// One M x W matrix at a single subcarrier frequency.
DoaSpectrum music_doa(const Eigen::MatrixXcd& data, double freq_hz, const RadioConfig& radio,
                      const MusicOptions& options = {});

struct DoaInput {
  Eigen::MatrixXcd data;  // M x W
  double freq_hz = 0.0;
};

// Covariances are averaged within consecutive bands of `band_size` inputs and
// steered at the band's mean frequency; bands combine by summing their
// noise-subspace residuals. band_size = 0 puts everything in one band.
class WidebandDoa {
 public:
  WidebandDoa(const std::vector<DoaInput>& inputs, const RadioConfig& radio,
              const MusicOptions& options, std::size_t band_size);
  // Normalized residual in [0, 1]; zero at a perfect steering match.
  double residual(double theta_deg) const;
  DoaSpectrum spectrum() const;

 private:
  struct Band {
    Eigen::MatrixXcd noise;
    double freq_hz = 0.0;
  };
  std::vector<Band> bands_;
  std::size_t antennas_ = 0;
  std::size_t temporal_len_ = 0;
  double spacing_m_ = 0.0;
  double d_over_lambda_ = 1.0;
};

// Every theta' in [-90, 90] with sin theta' = sin theta + n / d_over_lambda,
// theta itself included, ascending.
std::vector<double> alias_set(double theta_deg, double d_over_lambda);

// ToF snapshots take `subarray_len` adjacent subcarriers by `temporal_len`
// frames; shifting the subarray only rescales each path, so sliding it over
// the band smooths the covariance.
struct TofOptions {
  std::size_t subarray_len = 16;
  std::size_t temporal_len = 4;
  std::size_t presum = 1;
  std::size_t assume_sources = 1;
};

// One or more K x W matrices (e.g. one per antenna) with covariances pooled.
TofSpectrum music_tof(const std::vector<Eigen::MatrixXcd>& data, const RadioConfig& radio,
                      const TofOptions& options = {});
TofSpectrum music_tof(const Eigen::MatrixXcd& data, const RadioConfig& radio,
                      const TofOptions& options = {});

struct ParameterPoint {
  double v_hat = 0.0;    // m/s, mid-window
  double phi_hat = 0.0;  // deg
  double tau_hat = 0.0;  // s
};

enum class DoaResolution {
  kNone,              // d <= lambda / 2, nothing to resolve
  kWideband,          // aliases scored by consistency across subcarrier bands
  kReferenceSpacing,  // aliases scored on a half-wavelength reference array
  kExternal,          // clear spectrum supplied from outside
};

struct PeakEstimate {
  VaPeak peak;
  std::size_t window = 0;
  ParameterPoint point;
  DoaSpectrum ambiguous;
  DoaSpectrum clear;
  TofSpectrum tof;
  DoaResolution resolution = DoaResolution::kNone;
};

// A half-wavelength recording of the same scene, used to pick between aliases.
struct ReferenceArray {
  const ProductStream* stream = nullptr;
  RadioConfig radio;
};

// The defaults integrate the whole 80-frame window coherently.
struct EstimatorOptions {
  MusicOptions doa{10, 8, 1};
  TofOptions tof{16, 4, 8, 1};
  // Subcarriers per band for the wideband alias check.
  std::size_t band_size = 8;
  // When set, MUSIC assumes as many sources as there are peaks in the window.
  bool sources_from_peaks = true;
  ReferenceArray reference;
};

// Rotates out each peak's (v, a), forms the ambiguous DoA spectrum from the
// subcarrier-pooled covariance, resolves aliases with the built-in fallback,
// and estimates ToF.
std::vector<PeakEstimate> analyze_peaks(const ProductStream& stream, std::size_t window,
                                        const std::vector<VaPeak>& peaks,
                                        const RadioConfig& radio,
                                        const EstimatorOptions& options = {});

// Replaces the fallback DoA with the argmax of an externally produced clear
// spectrum.
void apply_clear_spectrum(PeakEstimate& estimate, const DoaSpectrum& clear);

// Maps a batch of ambiguous spectra to clear ones, same order and length.
using DoaDisambiguator =
    std::function<std::vector<DoaSpectrum>(const std::vector<DoaSpectrum>& ambiguous)>;

std::vector<ParameterPoint> estimate_parameters(const ProductStream& stream, std::size_t window,
                                                const std::vector<VaPeak>& peaks,
                                                const RadioConfig& radio,
                                                const EstimatorOptions& options = {},
                                                const DoaDisambiguator& disambiguator = {});

}  // namespace ghfd
