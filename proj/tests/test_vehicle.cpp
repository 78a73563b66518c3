#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "spinner/vehicle.hpp"

using namespace spinner;

TEST_CASE("allocation matrix has the documented rows and full column rank", "[vehicle]") {
  VehicleParams p;
  const AllocMatrix m = allocation_matrix(p);
  REQUIRE(m.row(0).isApprox(Eigen::RowVector3d(1, 1, 1)));
  REQUIRE(m(1, 0) == 0.0);
  REQUIRE(m(1, 1) == 0.108);
  REQUIRE(m(1, 2) == -0.108);
  REQUIRE(m(2, 0) == -0.125);
  REQUIRE(m(3, 0) == -0.015);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  REQUIRE(lu.rank() == 3);
}

TEST_CASE("unit thrusts produce the expected wrench", "[vehicle]") {
  VehicleParams p;
  const Wrench w = wrench_from_thrusts(p, {Vec3{1, 1, 1}});
  REQUIRE(w.thrust == Catch::Approx(3.0).margin(1e-15));
  REQUIRE(w.torque.x() == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(w.torque.y() == Catch::Approx(0.001).margin(1e-15));
  REQUIRE(w.torque.z() == Catch::Approx(0.015).margin(1e-15));
}

TEST_CASE("hover equilibrium matches the closed form for the symmetric frame", "[vehicle]") {
  VehicleParams p;
  const HoverSolution s = hover_equilibrium(p);

  // With arm_y1 == arm_y2 and arm_x1 == arm_x2 the solution reduces to
  // u1 == u2 and u0 = (2*arm_y1/arm_y0) * u1.
  const double u12 = p.mass * p.gravity / (2.0 + 2.0 * p.arm_y1 / p.arm_y0);
  const double u0 = 2.0 * p.arm_y1 / p.arm_y0 * u12;
  REQUIRE(s.command.thrusts(0) == Catch::Approx(u0).margin(1e-12));
  REQUIRE(s.command.thrusts(1) == Catch::Approx(u12).margin(1e-12));
  REQUIRE(s.command.thrusts(2) == Catch::Approx(u12).margin(1e-12));

  REQUIRE(s.command.thrusts.sum() == Catch::Approx(p.mass * p.gravity).margin(1e-12));
  const Wrench w = wrench_from_thrusts(p, s.command);
  REQUIRE(std::abs(w.torque.x()) < 1e-12);
  REQUIRE(std::abs(w.torque.y()) < 1e-12);

  // Residual yaw torque is positive (rotors 1 and 2 dominate) and matches the
  // hand-computed value for the default frame.
  REQUIRE(s.residual_yaw_torque == Catch::Approx(0.05580741).margin(1e-7));
  REQUIRE(w.torque.z() == Catch::Approx(s.residual_yaw_torque).margin(1e-15));
}

TEST_CASE("plate calibration reproduces the measured spin rates", "[vehicle]") {
  VehicleParams p;
  for (const auto& [width, rate] : {std::pair{20, kPlateRate20mm},
                                    std::pair{30, kPlateRate30mm},
                                    std::pair{40, kPlateRate40mm}}) {
    VehicleParams q;
    q.plate_yaw_drag_coeff = plate_coeff_for_width(p, width);
    REQUIRE(equilibrium_spin_rate(q) == Catch::Approx(rate).margin(1e-12));
  }
  // Pinned value for the 30 mm plate: residual / 9.3^2.
  REQUIRE(plate_coeff_for_width(p, 30) == Catch::Approx(6.45248e-4).margin(1e-8));
  REQUIRE_THROWS_AS(plate_coeff_for_width(p, 25), std::invalid_argument);
}

TEST_CASE("default parameters carry the 30 mm plate", "[vehicle]") {
  VehicleParams p;
  REQUIRE(p.plate_yaw_drag_coeff == plate_coeff_for_width(p, 30));
  REQUIRE(equilibrium_spin_rate(p) == Catch::Approx(kPlateRate30mm).margin(1e-12));
}

TEST_CASE("rpm and thrust maps invert each other", "[vehicle]") {
  VehicleParams p;
  for (double u : {0.5, 2.0, 3.7505, 7.9}) {
    const double rpm = rpm_from_thrust(p, u);
    REQUIRE(rpm == Catch::Approx(std::sqrt(u / p.thrust_coeff)).epsilon(1e-12));
    REQUIRE(thrust_from_rpm(p, rpm) == Catch::Approx(u).epsilon(1e-12));
  }
  // Hover-scale thrust needs roughly 16k RPM with the default coefficient.
  REQUIRE(rpm_from_thrust(p, 3.7505) == Catch::Approx(16309.3).margin(0.5));
  REQUIRE_THROWS_AS(rpm_from_thrust(p, -0.1), std::domain_error);
  REQUIRE_THROWS_AS(thrust_from_rpm(p, -1.0), std::domain_error);
}

TEST_CASE("thrust clamp saturates and reports it", "[vehicle]") {
  VehicleParams p;
  const auto ok = clamp_thrusts(p, {Vec3{1, 2, 3}});
  REQUIRE_FALSE(ok.clamped);
  REQUIRE(ok.command.thrusts == Vec3(1, 2, 3));
  const auto hi = clamp_thrusts(p, {Vec3{9, -1, 4}});
  REQUIRE(hi.clamped);
  REQUIRE(hi.command.thrusts == Vec3(8, 0, 4));
}

TEST_CASE("parameter validation rejects nonsense", "[vehicle]") {
  VehicleParams p;
  REQUIRE_NOTHROW(p.validate());
  p.mass = 0.0;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams();
  p.rotor_thrust_max = p.rotor_thrust_min;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams();
  p.inertia_diag(1) = -1e-3;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
}
