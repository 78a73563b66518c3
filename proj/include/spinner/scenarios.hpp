#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "spinner/config.hpp"
#include "spinner/sim.hpp"

namespace spinner {

// Vehicle params with the plate drag coefficient matching a given width.
inline VehicleParams vehicle_with_plate(const VehicleParams& base, int plate_width_mm) {
  VehicleParams p = base;
  p.plate_yaw_drag_coeff = plate_coeff_for_width(p, plate_width_mm);
  return p;
}

namespace detail {
inline void apply_stack(Scenario& sc, const StackConfig& stack) {
  sc.vehicle = stack.vehicle;
  sc.nmpc = stack.nmpc;
  sc.indi = stack.indi;
}
}  // namespace detail

// Hold a point. start_at_rest shows the spin-up from zero yaw rate;
// otherwise the craft starts already at the plate's equilibrium spin.
inline Scenario hover_scenario(const StackConfig& stack, int plate_width_mm, std::uint64_t seed,
                               double duration, bool start_at_rest,
                               const Vec3& hold = Vec3{0, 0, 1}) {
  Scenario sc;
  detail::apply_stack(sc, stack);
  sc.name = "hover";
  sc.duration = duration;
  sc.seed = seed;
  sc.plate_width_mm = plate_width_mm;
  sc.reference = std::make_shared<HoverReference>(sc.vehicle, hold);
  sc.initial_state.position = hold;
  if (!start_at_rest) {
    const VehicleParams p = vehicle_with_plate(sc.vehicle, plate_width_mm);
    sc.initial_state.body_rate = Vec3{0, 0, equilibrium_spin_rate(p)};
  }
  return sc;
}

// Figure-eight track, flown for two loops starting on the reference with
// the equilibrium spin.
inline Scenario lemniscate_scenario(const StackConfig& stack, std::uint64_t seed, bool noisy,
                                    int plate_width_mm = 30) {
  Scenario sc;
  detail::apply_stack(sc, stack);
  sc.name = "lemniscate";
  sc.seed = seed;
  sc.plate_width_mm = plate_width_mm;
  auto ref = std::make_shared<LemniscateReference>(sc.vehicle, 6.0, 3.0, 0.6, 2.0,
                                                   Vec3{0, 0, 1.0});
  sc.duration = 2.0 * ref->period();
  sc.reference = ref;
  if (noisy) {
    sc.sensor_noise.position_std = 0.005;
    sc.sensor_noise.rate_std = 0.01;
  }
  const ReferencePoint r0 = ref->sample(0.0);
  sc.initial_state.position = r0.position;
  sc.initial_state.velocity = r0.velocity;
  sc.initial_state.attitude = r0.attitude;
  const VehicleParams p = vehicle_with_plate(sc.vehicle, plate_width_mm);
  sc.initial_state.body_rate = Vec3{0, 0, equilibrium_spin_rate(p)};
  return sc;
}

// Hover through a finite head-on gust: wind switches on at t_on and off at
// t_off. Recovery is judged against the hold point after the gust clears.
inline Scenario gust_scenario(const StackConfig& stack, std::uint64_t seed, double speed = 4.8,
                              double t_on = 5.0, double t_off = 11.0, double duration = 18.0,
                              int plate_width_mm = 30) {
  Scenario sc = hover_scenario(stack, plate_width_mm, seed, duration, false);
  sc.name = "gust";
  sc.wind = gust_step_profile(speed, t_on, Vec3{1, 0, 0});
  sc.wind.steps.push_back({t_off, Vec3::Zero()});
  return sc;
}

// Smooth polynomial path through waypoints, with a short settling tail.
inline Scenario waypoint_scenario(const StackConfig& stack, const std::vector<Vec3>& waypoints,
                                  double segment_speed, std::uint64_t seed,
                                  int plate_width_mm = 30) {
  Scenario sc;
  detail::apply_stack(sc, stack);
  sc.name = "waypoints";
  sc.seed = seed;
  sc.plate_width_mm = plate_width_mm;
  auto ref = std::make_shared<WaypointReference>(sc.vehicle, waypoints, segment_speed);
  sc.duration = ref->duration() + 2.0;
  sc.reference = ref;
  sc.initial_state.position = waypoints.front();
  const VehicleParams p = vehicle_with_plate(sc.vehicle, plate_width_mm);
  sc.initial_state.body_rate = Vec3{0, 0, equilibrium_spin_rate(p)};
  return sc;
}

}  // namespace spinner
