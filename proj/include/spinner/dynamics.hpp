#pragma once

#include <stdexcept>

#include "spinner/attitude.hpp"
#include "spinner/types.hpp"
#include "spinner/vehicle.hpp"

// Rigid-body equations of motion and RK4 integration. World frame is z-up;
// gravity enters as the vector [0, 0, -g]. Drag acts on airspeed in the body
// frame: R D R^T (v - v_wind).

namespace spinner {

struct State {
  Vec3 position = Vec3::Zero();       // m, world
  UnitQuaternion attitude;            // body to world
  Vec3 velocity = Vec3::Zero();       // m/s, world
  Vec3 body_rate = Vec3::Zero();      // rad/s, body [p, q, r]

  StateVec to_vector() const {
    StateVec x;
    x << position, attitude.w, attitude.x, attitude.y, attitude.z, velocity, body_rate;
    return x;
  }

  // No renormalization here: integrator stages must see raw values.
  static State from_vector(const StateVec& x) {
    State s;
    s.position = x.segment<3>(0);
    s.attitude = {x(3), x(4), x(5), x(6)};
    s.velocity = x.segment<3>(7);
    s.body_rate = x.segment<3>(10);
    return s;
  }

  bool finite() const { return to_vector().allFinite(); }
};

// Roll/pitch see small linear damping; yaw sees the quadratic plate drag.
inline Vec3 rotational_drag_torque(const VehicleParams& p, const Vec3& omega) {
  return {p.rot_damping_xy * omega.x(), p.rot_damping_xy * omega.y(),
          p.plate_yaw_drag_coeff * std::abs(omega.z()) * omega.z()};
}

inline Vec3 translational_accel(const VehicleParams& p, const State& s, double thrust,
                                const Vec3& wind_velocity) {
  const Mat3 r = quat_to_rotation(s.attitude);
  const Vec3 air_rel = s.velocity - wind_velocity;
  const Vec3 drag = r * (p.drag_matrix_diag.asDiagonal() * (r.transpose() * air_rel));
  return (thrust * r.col(2) - drag) / p.mass + Vec3{0.0, 0.0, -p.gravity};
}

inline Vec3 rotational_accel(const VehicleParams& p, const State& s, const Vec3& torque) {
  const Vec3 jw = p.inertia_diag.cwiseProduct(s.body_rate);
  const Vec3 rhs = torque - s.body_rate.cross(jw) - rotational_drag_torque(p, s.body_rate);
  return rhs.cwiseQuotient(p.inertia_diag);
}

inline Vec4 quat_derivative(const State& s) {
  const UnitQuaternion omega{0.0, s.body_rate.x(), s.body_rate.y(), s.body_rate.z()};
  return 0.5 * quat_product_raw(s.attitude, omega);
}

// external_torque models a constant body-frame disturbance (test rigs, INDI
// A/B experiments); zero in the nominal plant.
inline StateVec state_derivative(const VehicleParams& p, const State& s,
                                 const RotorCommand& cmd, const Vec3& wind_velocity,
                                 const Vec3& external_torque = Vec3::Zero()) {
  const Wrench w = wrench_from_thrusts(p, cmd);
  StateVec dx;
  dx.segment<3>(0) = s.velocity;
  dx.segment<4>(3) = quat_derivative(s);
  dx.segment<3>(7) = translational_accel(p, s, w.thrust, wind_velocity);
  dx.segment<3>(10) = rotational_accel(p, s, w.torque + external_torque);
  return dx;
}

inline State integrate_rk4(const VehicleParams& p, const State& s, const RotorCommand& cmd,
                           const Vec3& wind_velocity, double dt,
                           const Vec3& external_torque = Vec3::Zero()) {
  if (!(dt > 0.0) || dt > 0.05)
    throw std::out_of_range("integrate_rk4: dt must be in (0, 0.05]");
  const StateVec x0 = s.to_vector();
  const StateVec k1 = state_derivative(p, s, cmd, wind_velocity, external_torque);
  const StateVec k2 = state_derivative(p, State::from_vector(x0 + 0.5 * dt * k1), cmd,
                                       wind_velocity, external_torque);
  const StateVec k3 = state_derivative(p, State::from_vector(x0 + 0.5 * dt * k2), cmd,
                                       wind_velocity, external_torque);
  const StateVec k4 =
      state_derivative(p, State::from_vector(x0 + dt * k3), cmd, wind_velocity, external_torque);
  State out = State::from_vector(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  out.attitude = out.attitude.normalized();
  return out;
}

}  // namespace spinner
