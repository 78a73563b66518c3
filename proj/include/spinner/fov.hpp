#pragma once

#include <cmath>
#include <stdexcept>

#include "spinner/types.hpp"

namespace spinner {

// Tilted sensor swept around the spin axis. Pure cone geometry: no rays,
// no occlusion.
struct SensorMount {
  double native_vertical_fov_deg = 59.0;
  double tilt_angle_deg = 15.0;  // mount pitch from horizontal
  double native_horizontal_fov_deg = 70.0;

  void validate() const {
    auto bad = [](const char* what) {
      throw std::invalid_argument(std::string("SensorMount: ") + what);
    };
    if (!(native_vertical_fov_deg > 0.0 && native_vertical_fov_deg < 180.0))
      bad("vertical fov must be in (0, 180) degrees");
    if (!(native_horizontal_fov_deg > 0.0 && native_horizontal_fov_deg < 180.0))
      bad("horizontal fov must be in (0, 180) degrees");
    if (!(tilt_angle_deg >= 0.0 && tilt_angle_deg < 90.0))
      bad("tilt must be in [0, 90) degrees");
  }
};

// A cone tilted by a degrees sweeps a band a degrees above and below its
// untilted coverage over one revolution.
inline double swept_vertical_fov(const SensorMount& m) {
  m.validate();
  return m.native_vertical_fov_deg + 2.0 * m.tilt_angle_deg;
}

inline double swept_horizontal_fov(const SensorMount& m, double spin_rate_radps) {
  m.validate();
  return std::abs(spin_rate_radps) > 0.0 ? 360.0 : m.native_horizontal_fov_deg;
}

// Worst-case revisit time of a heading that just left the horizontal FoV.
inline double blind_zone_refresh_s(double spin_rate_radps) {
  if (!(std::abs(spin_rate_radps) > 0.0))
    throw std::domain_error("blind_zone_refresh_s: needs a nonzero spin rate");
  return 2.0 * kPi / std::abs(spin_rate_radps);
}

}  // namespace spinner
