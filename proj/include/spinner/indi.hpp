#pragma once

#include <cmath>
#include <stdexcept>

#include "spinner/dynamics.hpp"
#include "spinner/nmpc.hpp"
#include "spinner/vehicle.hpp"

namespace spinner {

// Critically damped second-order low-pass: two cascaded one-pole sections
// discretized exactly under zero-order hold. Seeds itself with the first
// sample so constant inputs pass through without a startup transient.
class LowPassFilter2 {
 public:
  LowPassFilter2(double cutoff_hz, double dt) {
    if (!(cutoff_hz > 0.0) || !(dt > 0.0))
      throw std::invalid_argument("low-pass filter needs cutoff_hz > 0 and dt > 0");
    alpha_ = std::exp(-2.0 * kPi * cutoff_hz * dt);
  }

  Vec3 step(const Vec3& x) {
    if (!warmed_) {
      s1_ = x;
      s2_ = x;
      warmed_ = true;
    } else {
      s1_ = alpha_ * s1_ + (1.0 - alpha_) * x;
      s2_ = alpha_ * s2_ + (1.0 - alpha_) * s1_;
    }
    return s2_;
  }

  const Vec3& value() const { return s2_; }
  bool warmed() const { return warmed_; }
  double alpha() const { return alpha_; }

  void reset() {
    warmed_ = false;
    s1_.setZero();
    s2_.setZero();
  }

 private:
  double alpha_ = 0.0;
  bool warmed_ = false;
  Vec3 s1_ = Vec3::Zero();
  Vec3 s2_ = Vec3::Zero();
};

struct IndiConfig {
  double cutoff_hz = 12.0;
  // Yaw gain deliberately soft: the craft is meant to spin freely about z.
  Vec3 rate_gain{20.0, 20.0, 5.0};

  void validate() const {
    if (!(cutoff_hz > 0.0)) throw std::invalid_argument("indi: cutoff_hz must be > 0");
    if (!(rate_gain.minCoeff() > 0.0)) throw std::invalid_argument("indi: rate_gain must be > 0");
  }
};

// The three filter channels share identical dynamics; matching phase lag
// between the rate and torque paths is what makes the increment law valid.
struct IndiState {
  LowPassFilter2 rate_filter;        // omega_f
  LowPassFilter2 rate_deriv_filter;  // omega_dot_f, fed with finite differences
  LowPassFilter2 torque_filter;      // tau_f, fed with the applied rotor torque
  Vec3 prev_rate = Vec3::Zero();
  bool have_prev_rate = false;
  long ticks = 0;

  IndiState(const IndiConfig& cfg, double dt)
      : rate_filter(cfg.cutoff_hz, dt),
        rate_deriv_filter(cfg.cutoff_hz, dt),
        torque_filter(cfg.cutoff_hz, dt) {
    cfg.validate();
  }

  Vec3 filt_rate() const { return rate_filter.value(); }
  Vec3 filt_rate_deriv() const { return rate_deriv_filter.value(); }
  Vec3 filt_torque() const { return torque_filter.value(); }

  void reset() {
    rate_filter.reset();
    rate_deriv_filter.reset();
    torque_filter.reset();
    prev_rate.setZero();
    have_prev_rate = false;
    ticks = 0;
  }
};

// Unmodeled body torque, solved from the rotational dynamics at the
// filtered signals. Zero for a perfect model with matched inputs.
inline Vec3 estimate_disturbance(const VehicleParams& p, const IndiState& s) {
  const Vec3 w = s.filt_rate();
  return -s.filt_torque() + p.inertia_diag.cwiseProduct(s.filt_rate_deriv()) +
         w.cross(p.inertia_diag.cwiseProduct(w)) + rotational_drag_torque(p, w);
}

// Incremental command: whatever torque is currently acting, plus the inertia
// times the wanted acceleration change. Disturbances cancel without being
// modeled explicitly.
inline Vec3 incremental_torque(const VehicleParams& p, const IndiState& s,
                               const Vec3& desired_rate_accel) {
  return s.filt_torque() +
         p.inertia_diag.cwiseProduct(desired_rate_accel - s.filt_rate_deriv());
}

inline Eigen::Matrix<double, 3, 4> allocation_pseudoinverse(const VehicleParams& p) {
  const AllocMatrix m = allocation_matrix(p);
  return (m.transpose() * m).inverse() * m.transpose();
}

struct AllocationResult {
  RotorCommand command;
  bool saturated = false;
};

// Least-squares fit of three rotor thrusts to the four wrench targets,
// then clamped to the actuator range. With three rotors the yaw column is
// nearly in the row null space: yaw torque mostly rides along with thrust
// and pitch, which is exactly why the airframe carries a drag plate.
inline AllocationResult allocate(const VehicleParams& p, double total_thrust,
                                 const Vec3& torque) {
  Eigen::Vector4d target;
  target << total_thrust, torque(0), torque(1), torque(2);
  const Vec3 u = allocation_pseudoinverse(p) * target;
  const ClampedCommand c = clamp_thrusts(p, RotorCommand{u});
  return {c.command, c.clamped};
}

// One 200 Hz inner-loop step. Filters the measured rate, its finite
// difference, and the torque of the previously applied command; tracks the
// rate plan from the NMPC solution. The first two ticks pass the NMPC
// command through unchanged while the filters seed.
inline RotorCommand indi_tick(const VehicleParams& p, const IndiConfig& cfg, IndiState& s,
                              const Vec3& measured_rate, const RotorCommand& last_cmd,
                              const NmpcSolution& plan, double dt,
                              bool* saturated = nullptr) {
  if (!(dt > 0.0)) throw std::invalid_argument("indi_tick: dt must be > 0");
  if (plan.inputs.empty() || plan.predicted_states.size() < 2)
    throw std::invalid_argument("indi_tick: plan needs at least one stage");
  if (!(plan.stage_dt > 0.0)) throw std::invalid_argument("indi_tick: plan stage_dt must be > 0");

  ++s.ticks;
  const Vec3 raw_deriv =
      s.have_prev_rate ? Vec3((measured_rate - s.prev_rate) / dt) : Vec3(Vec3::Zero());
  s.prev_rate = measured_rate;
  s.have_prev_rate = true;

  s.rate_filter.step(measured_rate);
  s.rate_deriv_filter.step(raw_deriv);
  const Eigen::Vector4d applied = allocation_matrix(p) * last_cmd.thrusts;
  s.torque_filter.step(applied.tail<3>());

  if (saturated != nullptr) *saturated = false;
  if (s.ticks <= 2) return RotorCommand{plan.inputs[0]};

  const Vec3 rate_ref = plan.predicted_states[1].body_rate;
  const Vec3 rate_accel_ff =
      (plan.predicted_states[1].body_rate - plan.predicted_states[0].body_rate) / plan.stage_dt;
  const Vec3 desired_accel =
      cfg.rate_gain.cwiseProduct(rate_ref - s.filt_rate()) + rate_accel_ff;
  const Vec3 tau_d = incremental_torque(p, s, desired_accel);

  const AllocationResult out = allocate(p, plan.inputs[0].sum(), tau_d);
  if (saturated != nullptr) *saturated = out.saturated;
  return out.command;
}

}  // namespace spinner
