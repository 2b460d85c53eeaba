#include "ghfd/preprocess.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace ghfd {

ProductStream conjugate_multiply(const CTensor3& surveillance, const Eigen::MatrixXcd& reference,
                                 double frame_period_s) {
  const std::size_t M = surveillance.dim0();
  const std::size_t K = surveillance.dim1();
  const std::size_t W = surveillance.dim2();
  if (static_cast<std::size_t>(reference.rows()) != K ||
      static_cast<std::size_t>(reference.cols()) != W) {
    throw DataError("reference CSI is " + std::to_string(reference.rows()) + "x" +
                    std::to_string(reference.cols()) + " but surveillance needs " +
                    std::to_string(K) + "x" + std::to_string(W));
  }
  ProductStream out;
  out.values = CTensor3(M, K, W);
  out.frame_period_s = frame_period_s;
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 0; k < K; ++k) {
      const cd* src = surveillance.series(m, k);
      cd* dst = out.values.series(m, k);
      for (std::size_t w = 0; w < W; ++w) {
        dst[w] = src[w] * std::conj(reference(static_cast<Eigen::Index>(k),
                                              static_cast<Eigen::Index>(w)));
      }
    }
  }
  return out;
}

ProductStream conjugate_multiply(const CsiRecording& recording) {
  return conjugate_multiply(recording.surveillance, recording.reference, recording.frame_period_s);
}

ProductStream remove_static(const ProductStream& stream, std::size_t window_w,
                            const StaticRemovalOptions& options) {
  if (stream.dc_removed) throw DataError("stream has already been DC-nulled");
  if (window_w < 4) throw ConfigError("window_w must be >= 4 for FFT nulling");
  if (window_w > stream.num_frames()) {
    throw ConfigError("window_w (" + std::to_string(window_w) + ") exceeds the " +
                      std::to_string(stream.num_frames()) + " available frames");
  }
  const double span = static_cast<double>(window_w) * stream.frame_period_s;
  if (span > options.max_window_s + 1e-12) {
    throw ConfigError("window spans " + std::to_string(span) +
                      " s, longer than the coherence limit of " +
                      std::to_string(options.max_window_s) + " s");
  }

  ProductStream out = stream;
  out.window_frames = window_w;
  out.window_span_s = span;
  out.dc_removed = true;

  Eigen::FFT<double> fft;
  std::vector<cd> block;
  std::vector<cd> spectrum;
  const std::size_t W = stream.num_frames();
  for (std::size_t m = 0; m < stream.num_antennas(); ++m) {
    for (std::size_t k = 0; k < stream.num_subcarriers(); ++k) {
      cd* series = out.values.series(m, k);
      for (std::size_t start = 0; start < W; start += window_w) {
        const std::size_t len = std::min(window_w, W - start);
        block.assign(series + start, series + start + len);
        fft.fwd(spectrum, block);
        spectrum[0] = 0.0;
        if (options.null_adjacent_bins && len > 2) {
          spectrum[1] = 0.0;
          spectrum[len - 1] = 0.0;
        }
        fft.inv(block, spectrum);
        std::copy(block.begin(), block.end(), series + start);
      }
    }
  }
  return out;
}

}  // namespace ghfd
