#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "spinner/types.hpp"

// Airframe constants and rotor geometry for the three-rotor spinner.
// Rotor 0 sits on the -y arm and spins opposite to rotors 1 and 2, so its
// counter-torque enters the yaw row with a negative sign. Thrust commands are
// per-rotor forces in newtons; rotor speed only appears via the quadratic
// thrust map.

namespace spinner {

// Measured steady spin rates for the three anti-torque plate widths (rad/s).
inline constexpr double kPlateRate20mm = 15.2;
inline constexpr double kPlateRate30mm = 9.3;
inline constexpr double kPlateRate40mm = 5.4;

struct RotorCommand {
  Vec3 thrusts = Vec3::Zero();  // N, one per rotor
};

struct Wrench {
  double thrust = 0.0;        // N, along body z
  Vec3 torque = Vec3::Zero();  // N*m, body frame
};

struct VehicleParams {
  double mass = 1.15;                                  // kg
  Vec3 inertia_diag{5.59e-3, 5.77e-3, 6.05e-3};        // kg*m^2
  Vec3 drag_matrix_diag{0.48, 0.50, 0.65};             // kg/s, linear body drag
  double thrust_coeff = 1.41e-8;                       // N per RPM^2
  double counter_torque_coeff = 0.015;                 // N*m per N of thrust
  double arm_x1 = 0.108, arm_x2 = 0.108;               // m, roll moment arms
  double arm_y0 = 0.125, arm_y1 = 0.063, arm_y2 = 0.063;  // m, pitch moment arms
  double gravity = 9.81;                               // m/s^2
  double rotor_thrust_min = 0.0;                       // N
  double rotor_thrust_max = 8.0;                       // N
  double plate_yaw_drag_coeff = 0.0;                   // N*m*s^2, set by ctor
  double rot_damping_xy = 1e-3;                        // N*m*s, roll/pitch damping

  VehicleParams();  // defaults calibrate the plate for the 30 mm width

  void validate() const {
    auto bad = [](const std::string& what) {
      throw std::invalid_argument("VehicleParams: " + what);
    };
    if (!(mass > 0.0)) bad("mass must be positive");
    if (!(inertia_diag.minCoeff() > 0.0)) bad("inertia_diag must be positive");
    if (drag_matrix_diag.minCoeff() < 0.0) bad("drag_matrix_diag must be non-negative");
    if (!(thrust_coeff > 0.0)) bad("thrust_coeff must be positive");
    if (!(counter_torque_coeff > 0.0)) bad("counter_torque_coeff must be positive");
    if (!(arm_x1 > 0.0 && arm_x2 > 0.0)) bad("roll arms must be positive");
    if (!(arm_y0 > 0.0 && arm_y1 > 0.0 && arm_y2 > 0.0)) bad("pitch arms must be positive");
    if (!(gravity > 0.0)) bad("gravity must be positive");
    if (rotor_thrust_min < 0.0) bad("rotor_thrust_min must be non-negative");
    if (!(rotor_thrust_max > rotor_thrust_min)) bad("rotor_thrust_max must exceed min");
    if (plate_yaw_drag_coeff < 0.0) bad("plate_yaw_drag_coeff must be non-negative");
    if (rot_damping_xy < 0.0) bad("rot_damping_xy must be non-negative");
  }
};

// Rows: total thrust, roll torque, pitch torque, yaw counter-torque.
inline AllocMatrix allocation_matrix(const VehicleParams& p) {
  AllocMatrix m;
  m << 1.0, 1.0, 1.0,
      0.0, p.arm_x1, -p.arm_x2,
      -p.arm_y0, p.arm_y1, p.arm_y2,
      -p.counter_torque_coeff, p.counter_torque_coeff, p.counter_torque_coeff;
  return m;
}

inline Wrench wrench_from_thrusts(const VehicleParams& p, const RotorCommand& cmd) {
  const Eigen::Vector4d w = allocation_matrix(p) * cmd.thrusts;
  return {w(0), w.tail<3>()};
}

inline double thrust_from_rpm(const VehicleParams& p, double rpm) {
  if (rpm < 0.0) throw std::domain_error("thrust_from_rpm: negative rpm");
  return p.thrust_coeff * rpm * rpm;
}

inline double rpm_from_thrust(const VehicleParams& p, double thrust) {
  if (thrust < 0.0) throw std::domain_error("rpm_from_thrust: negative thrust");
  return std::sqrt(thrust / p.thrust_coeff);
}

struct ClampedCommand {
  RotorCommand command;
  bool clamped = false;
};

inline ClampedCommand clamp_thrusts(const VehicleParams& p, const RotorCommand& cmd) {
  ClampedCommand out;
  for (int i = 0; i < 3; ++i) {
    const double u = cmd.thrusts(i);
    const double c = std::clamp(u, p.rotor_thrust_min, p.rotor_thrust_max);
    out.command.thrusts(i) = c;
    if (c != u) out.clamped = true;
  }
  return out;
}

struct HoverSolution {
  RotorCommand command;
  double residual_yaw_torque = 0.0;  // N*m left over after zeroing roll/pitch
};

// Thrusts that balance weight with zero roll and pitch torque. Yaw cannot be
// zeroed simultaneously; the leftover counter-torque is what spins the craft.
inline HoverSolution hover_equilibrium(const VehicleParams& p) {
  const AllocMatrix m = allocation_matrix(p);
  const Mat3 a = m.topRows<3>();
  const Eigen::FullPivLU<Mat3> lu(a);
  if (!lu.isInvertible())
    throw std::runtime_error("hover_equilibrium: thrust/torque rows are singular");
  HoverSolution s;
  s.command.thrusts = lu.solve(Vec3{p.mass * p.gravity, 0.0, 0.0});
  s.residual_yaw_torque = m.row(3).dot(s.command.thrusts);
  return s;
}

// Plate drag balances the hover residual at the measured rate:
// c = tau_residual / rate^2.
inline double calibrate_plate_coeff(const VehicleParams& p, double measured_rate) {
  if (!(std::abs(measured_rate) > 0.0))
    throw std::domain_error("calibrate_plate_coeff: zero rate");
  return std::abs(hover_equilibrium(p).residual_yaw_torque) / (measured_rate * measured_rate);
}

inline double plate_coeff_for_width(const VehicleParams& p, int width_mm) {
  switch (width_mm) {
    case 20: return calibrate_plate_coeff(p, kPlateRate20mm);
    case 30: return calibrate_plate_coeff(p, kPlateRate30mm);
    case 40: return calibrate_plate_coeff(p, kPlateRate40mm);
    default:
      throw std::invalid_argument("plate_coeff_for_width: no plate of width " +
                                  std::to_string(width_mm) + " mm");
  }
}

// Steady spin rate where plate drag cancels the hover residual. Signed like
// the residual.
inline double equilibrium_spin_rate(const VehicleParams& p) {
  if (!(p.plate_yaw_drag_coeff > 0.0))
    throw std::domain_error("equilibrium_spin_rate: plate coefficient must be positive");
  const double tau = hover_equilibrium(p).residual_yaw_torque;
  const double mag = std::sqrt(std::abs(tau) / p.plate_yaw_drag_coeff);
  return tau >= 0.0 ? mag : -mag;
}

inline VehicleParams::VehicleParams() {
  plate_yaw_drag_coeff = calibrate_plate_coeff(*this, kPlateRate30mm);
}

}  // namespace spinner
