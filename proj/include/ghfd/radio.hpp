#pragma once

#include <cstddef>

namespace ghfd {

// Receiver radio parameters. Subcarriers are centred on the carrier:
// f_k = carrier + (k - (K - 1) / 2) * spacing, k = 0..K-1.
struct RadioConfig {
  double carrier_hz = 5.805e9;
  double bandwidth_hz = 80e6;
  std::size_t num_subcarriers = 64;
  std::size_t num_ula_antennas = 3;
  double antenna_spacing_wavelengths = 1.0;
  double packet_rate_hz = 488.0;

  double subcarrier_spacing_hz() const {
    return bandwidth_hz / static_cast<double>(num_subcarriers);
  }
  double subcarrier_hz(std::size_t k) const {
    return carrier_hz + (static_cast<double>(k) -
                         0.5 * static_cast<double>(num_subcarriers - 1)) *
                            subcarrier_spacing_hz();
  }
  double wavelength_m() const;
  double antenna_spacing_m() const { return antenna_spacing_wavelengths * wavelength_m(); }
  double frame_period_s() const { return 1.0 / packet_rate_hz; }
  // ToF values are unambiguous within one subcarrier-spacing period.
  double tof_period_s() const { return 1.0 / subcarrier_spacing_hz(); }

  // Throws ConfigError on violated invariants.
  void validate() const;
};

}  // namespace ghfd
