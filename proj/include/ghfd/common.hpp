#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ghfd {

using cd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

// Exceptions carry the CLI exit-code category they map to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated, or inconsistent data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// Failure crossing the out-of-process denoiser boundary (exit code 4).
class BoundaryError : public Error {
 public:
  using Error::Error;
};

// Dense complex 3-tensor stored with the last index fastest, so (antenna,
// subcarrier, frame) matches the on-disk CSI layout.
class CTensor3 {
 public:
  CTensor3() = default;
  CTensor3(std::size_t d0, std::size_t d1, std::size_t d2)
      : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2) {}

  std::size_t dim0() const { return d0_; }
  std::size_t dim1() const { return d1_; }
  std::size_t dim2() const { return d2_; }
  std::size_t size() const { return data_.size(); }

  cd& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * d1_ + j) * d2_ + k];
  }
  const cd& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * d1_ + j) * d2_ + k];
  }

  // Contiguous series along the last axis.
  cd* series(std::size_t i, std::size_t j) { return &data_[(i * d1_ + j) * d2_]; }
  const cd* series(std::size_t i, std::size_t j) const {
    return &data_[(i * d1_ + j) * d2_];
  }

  std::vector<cd>& data() { return data_; }
  const std::vector<cd>& data() const { return data_; }

  bool operator==(const CTensor3&) const = default;

 private:
  std::size_t d0_ = 0;
  std::size_t d1_ = 0;
  std::size_t d2_ = 0;
  std::vector<cd> data_;
};

}  // namespace ghfd
