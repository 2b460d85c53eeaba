#include "ghfd/radio.hpp"

#include <cmath>
#include <string>

#include "ghfd/common.hpp"

namespace ghfd {

double RadioConfig::wavelength_m() const { return kSpeedOfLight / carrier_hz; }

void RadioConfig::validate() const {
  if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz)) {
    throw ConfigError("carrier_hz must be positive");
  }
  if (!(bandwidth_hz > 0.0) || bandwidth_hz >= carrier_hz) {
    throw ConfigError("bandwidth_hz must be positive and below the carrier");
  }
  if (num_subcarriers < 1) throw ConfigError("num_subcarriers must be >= 1");
  if (num_ula_antennas < 2) throw ConfigError("num_ula_antennas must be >= 2");
  if (!(antenna_spacing_wavelengths > 0.0)) {
    throw ConfigError("antenna_spacing_wavelengths must be positive");
  }
  if (!(packet_rate_hz > 0.0) || !std::isfinite(packet_rate_hz)) {
    throw ConfigError("packet_rate_hz must be positive");
  }
}

}  // namespace ghfd
