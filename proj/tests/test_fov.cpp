#include <catch2/catch_amalgamated.hpp>

#include "spinner/fov.hpp"

using namespace spinner;

TEST_CASE("tilted sensor sweeps a wider vertical band", "[fov]") {
  SensorMount m;  // 59 degree sensor on a 15 degree wedge
  REQUIRE(swept_vertical_fov(m) == 89.0);

  m.tilt_angle_deg = 0.0;
  REQUIRE(swept_vertical_fov(m) == m.native_vertical_fov_deg);

  m.tilt_angle_deg = 40.0;
  REQUIRE(swept_vertical_fov(m) == 139.0);
}

TEST_CASE("sweep never narrows the native cone", "[fov]") {
  SensorMount m;
  for (double tilt : {0.0, 1e-9, 5.0, 15.0, 40.0, 89.9}) {
    m.tilt_angle_deg = tilt;
    const double swept = swept_vertical_fov(m);
    REQUIRE(swept >= m.native_vertical_fov_deg);
    if (tilt == 0.0) {
      REQUIRE(swept == m.native_vertical_fov_deg);
    } else {
      REQUIRE(swept > m.native_vertical_fov_deg);
    }
  }
}

TEST_CASE("spin grants full azimuthal coverage", "[fov]") {
  const SensorMount m;
  REQUIRE(swept_horizontal_fov(m, 9.3) == 360.0);
  REQUIRE(swept_horizontal_fov(m, -9.3) == 360.0);
  REQUIRE(swept_horizontal_fov(m, 0.0) == m.native_horizontal_fov_deg);
}

TEST_CASE("blind zone refresh is one revolution period", "[fov]") {
  REQUIRE(blind_zone_refresh_s(9.3) == 2.0 * kPi / 9.3);
  REQUIRE(blind_zone_refresh_s(9.3) == Catch::Approx(0.676).margin(1e-3));
  REQUIRE(blind_zone_refresh_s(-9.3) == blind_zone_refresh_s(9.3));
  REQUIRE_THROWS_AS(blind_zone_refresh_s(0.0), std::domain_error);
}

TEST_CASE("mount geometry is validated", "[fov]") {
  SensorMount m;
  m.native_vertical_fov_deg = 0.0;
  REQUIRE_THROWS_AS(swept_vertical_fov(m), std::invalid_argument);
  m = SensorMount{};
  m.native_vertical_fov_deg = 180.0;
  REQUIRE_THROWS_AS(swept_vertical_fov(m), std::invalid_argument);
  m = SensorMount{};
  m.tilt_angle_deg = -1.0;
  REQUIRE_THROWS_AS(swept_vertical_fov(m), std::invalid_argument);
  m = SensorMount{};
  m.tilt_angle_deg = 90.0;
  REQUIRE_THROWS_AS(swept_horizontal_fov(m, 1.0), std::invalid_argument);
}
