#pragma once

#include <cstddef>

#include "ghfd/common.hpp"
#include "ghfd/csi_sim.hpp"

namespace ghfd {

// Conjugate-product CSI, M x K x frames. After remove_static the frames are
// organised as consecutive windows of `window_frames` samples each.
struct ProductStream {
  CTensor3 values;
  double frame_period_s = 0.0;
  std::size_t window_frames = 0;  // 0 until remove_static has run
  double window_span_s = 0.0;
  bool dc_removed = false;

  std::size_t num_antennas() const { return values.dim0(); }
  std::size_t num_subcarriers() const { return values.dim1(); }
  std::size_t num_frames() const { return values.dim2(); }
  // Complete windows only; a trailing partial window is not counted.
  std::size_t num_windows() const {
    return window_frames == 0 ? 0 : num_frames() / window_frames;
  }
};

// output[m,k,t] = surveillance[m,k,t] * conj(reference[k,t]).
ProductStream conjugate_multiply(const CsiRecording& recording);
ProductStream conjugate_multiply(const CTensor3& surveillance, const Eigen::MatrixXcd& reference,
                                 double frame_period_s);

struct StaticRemovalOptions {
  // Also null the bins at +-1 around DC.
  bool null_adjacent_bins = false;
  // Windows longer than the channel coherence time are rejected.
  double max_window_s = 0.2;
};

// FFT each length-W window of every (m,k) series, zero the DC bin, IFFT.
ProductStream remove_static(const ProductStream& stream, std::size_t window_w,
                            const StaticRemovalOptions& options = {});

}  // namespace ghfd
