#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinner/attitude.hpp"
#include "spinner/dynamics.hpp"
#include "spinner/types.hpp"
#include "spinner/vehicle.hpp"

// Reference trajectory generators. Every sample carries position, velocity,
// acceleration, a tilt-only attitude consistent with the acceleration, zero
// body rate, and the rotor thrusts that realize the required force with zero
// roll/pitch torque. Yaw is left free everywhere: the craft spins.

namespace spinner {

struct ReferencePoint {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  UnitQuaternion attitude;
  Vec3 body_rate = Vec3::Zero();
  Vec3 rotor_thrusts = Vec3::Zero();
};

struct AttitudeReference {
  UnitQuaternion attitude;  // minimal tilt from level, zero yaw
  Vec3 rotor_thrusts = Vec3::Zero();
  double thrust = 0.0;  // N, total along body z
};

// Attitude and thrusts that realize acceleration a_ref against gravity and
// (optionally) linear drag at v_ref. Throws near free fall, where the
// required force direction is undefined.
inline AttitudeReference reference_attitude(const VehicleParams& p, const Vec3& a_ref,
                                            const Vec3& v_ref = Vec3::Zero()) {
  const Vec3 f_req = p.mass * (a_ref - Vec3{0.0, 0.0, -p.gravity}) +
                     p.drag_matrix_diag.asDiagonal() * v_ref;
  const double f_norm = f_req.norm();
  if (f_norm < 1e-6 * p.mass * p.gravity)
    throw std::domain_error("reference_attitude: free-fall singularity");

  const Vec3 z_ref = f_req / f_norm;
  AttitudeReference out;
  // Minimal rotation taking e_z to z_ref; no yaw component by construction.
  const Vec3 e_z{0.0, 0.0, 1.0};
  const double c = std::clamp(e_z.dot(z_ref), -1.0, 1.0);
  if (c < -1.0 + 1e-12)
    throw std::domain_error("reference_attitude: required thrust points straight down");
  const Vec3 axis = e_z.cross(z_ref);
  const double axis_norm = axis.norm();
  if (axis_norm < 1e-15) {
    out.attitude = UnitQuaternion::identity();
  } else {
    out.attitude = UnitQuaternion::from_axis_angle(axis, std::atan2(axis_norm, c));
  }

  out.thrust = f_norm;
  const AllocMatrix m = allocation_matrix(p);
  out.rotor_thrusts =
      Eigen::FullPivLU<Mat3>(Mat3(m.topRows<3>())).solve(Vec3{f_norm, 0.0, 0.0});
  return out;
}

class Reference {
 public:
  virtual ~Reference() = default;
  virtual ReferencePoint sample(double t) const = 0;
};

class HoverReference : public Reference {
 public:
  HoverReference(const VehicleParams& p, const Vec3& hold)
      : hold_(hold), thrusts_(hover_equilibrium(p).command.thrusts) {}

  ReferencePoint sample(double t) const override {
    ReferencePoint r;
    r.t = t;
    r.position = hold_;
    r.rotor_thrusts = thrusts_;
    return r;
  }

 private:
  Vec3 hold_;
  Vec3 thrusts_;
};

// Figure-eight: p(t) = [A sin(th), B sin(th) cos(th), C sin(th)] + center,
// th = Omega t. Omega is solved at construction so the peak speed equals
// v_max.
class LemniscateReference : public Reference {
 public:
  LemniscateReference(const VehicleParams& p, double extent_x, double extent_y, double extent_z,
                      double v_max, const Vec3& center = Vec3::Zero())
      : params_(p), center_(center) {
    if (!(extent_x > 0.0) || !(extent_y > 0.0) || !(extent_z > 0.0) || !(v_max > 0.0))
      throw std::invalid_argument("LemniscateReference: extents and v_max must be positive");
    a_ = extent_x / 2.0;
    b_ = extent_y;  // peak-to-peak of sin*cos is 1
    c_ = extent_z / 2.0;
    omega_ = v_max / peak_speed_factor();
  }

  double angular_rate() const { return omega_; }
  double period() const { return 2.0 * kPi / omega_; }

  ReferencePoint sample(double t) const override {
    const double th = omega_ * t;
    const double s = std::sin(th), co = std::cos(th);
    ReferencePoint r;
    r.t = t;
    r.position = center_ + Vec3{a_ * s, b_ * s * co, c_ * s};
    r.velocity = omega_ * Vec3{a_ * co, b_ * std::cos(2.0 * th), c_ * co};
    r.acceleration = omega_ * omega_ * Vec3{-a_ * s, -2.0 * b_ * std::sin(2.0 * th), -c_ * s};
    const AttitudeReference att = reference_attitude(params_, r.acceleration, r.velocity);
    r.attitude = att.attitude;
    r.rotor_thrusts = att.rotor_thrusts;
    return r;
  }

 private:
  // max over th of ||dp/dth||, found by dense sampling plus one parabolic
  // refinement; accurate far beyond the 1e-6 speed-cap tolerance.
  double peak_speed_factor() const {
    auto speed2 = [&](double th) {
      const double co = std::cos(th), c2 = std::cos(2.0 * th);
      return a_ * a_ * co * co + b_ * b_ * c2 * c2 + c_ * c_ * co * co;
    };
    const int n = 200000;
    double best_th = 0.0, best = -1.0;
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * kPi * i / n;
      const double v = speed2(th);
      if (v > best) {
        best = v;
        best_th = th;
      }
    }
    const double h = 2.0 * kPi / n;
    const double f0 = speed2(best_th - h), f1 = best, f2 = speed2(best_th + h);
    const double denom = f0 - 2.0 * f1 + f2;
    if (std::abs(denom) > 1e-300) {
      const double shift = 0.5 * h * (f0 - f2) / denom;
      best = std::max(best, speed2(best_th + shift));
    }
    return std::sqrt(best);
  }

  VehicleParams params_;
  Vec3 center_;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0, omega_ = 0.0;
};

// Piecewise quintic through waypoints: rest-to-rest over the whole path,
// C2 at interior knots, zero acceleration at every knot. Segment durations
// come from distance/speed, stretched where the min-jerk acceleration peak
// (5.7735 d / T^2) would exceed the ceiling.
class WaypointReference : public Reference {
 public:
  static constexpr double kAccelCeiling = 2.0;  // m/s^2

  WaypointReference(const VehicleParams& p, const std::vector<Vec3>& waypoints,
                    double segment_speed)
      : params_(p) {
    if (waypoints.size() < 2)
      throw std::invalid_argument("WaypointReference: need at least 2 waypoints");
    if (!(segment_speed > 0.0))
      throw std::invalid_argument("WaypointReference: segment_speed must be positive");

    const size_t n = waypoints.size() - 1;
    std::vector<double> dur(n);
    for (size_t i = 0; i < n; ++i) {
      const double d = (waypoints[i + 1] - waypoints[i]).norm();
      if (d < 1e-9)
        throw std::invalid_argument("WaypointReference: duplicate consecutive waypoints");
      const double t_speed = d / segment_speed;
      const double t_accel = std::sqrt(10.0 / std::sqrt(3.0) * d / kAccelCeiling);
      dur[i] = std::max(t_speed, t_accel);
    }

    // Knot velocities: rest at the ends, average-slope heuristic inside.
    std::vector<Vec3> vel(waypoints.size(), Vec3::Zero());
    for (size_t i = 1; i < n; ++i)
      vel[i] = (waypoints[i + 1] - waypoints[i - 1]) / (dur[i - 1] + dur[i]);

    double t0 = 0.0;
    for (size_t i = 0; i < n; ++i) {
      segments_.push_back(make_segment(waypoints[i], vel[i], waypoints[i + 1], vel[i + 1],
                                       t0, dur[i]));
      t0 += dur[i];
    }
    total_ = t0;
    first_ = waypoints.front();
    last_ = waypoints.back();
  }

  double duration() const { return total_; }

  ReferencePoint sample(double t) const override {
    ReferencePoint r;
    r.t = t;
    if (t <= 0.0 || segments_.empty()) {
      r.position = first_;
    } else if (t >= total_) {
      r.position = last_;
    } else {
      auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                 [](double v, const Segment& s) { return v < s.t0 + s.dur; });
      if (it == segments_.end()) it = std::prev(segments_.end());
      const Segment& s = *it;
      const double tau = t - s.t0;
      double pw = 1.0;
      for (int k = 0; k < 6; ++k) {
        r.position += s.coef[k] * pw;
        pw *= tau;
      }
      double pv = 1.0;
      for (int k = 1; k < 6; ++k) {
        r.velocity += double(k) * s.coef[k] * pv;
        pv *= tau;
      }
      double pa = 1.0;
      for (int k = 2; k < 6; ++k) {
        r.acceleration += double(k) * double(k - 1) * s.coef[k] * pa;
        pa *= tau;
      }
    }
    const AttitudeReference att = reference_attitude(params_, r.acceleration, r.velocity);
    r.attitude = att.attitude;
    r.rotor_thrusts = att.rotor_thrusts;
    return r;
  }

 private:
  struct Segment {
    double t0 = 0.0, dur = 0.0;
    Vec3 coef[6];  // position polynomial coefficients in local time
  };

  // Quintic Hermite with zero accelerations at both knots.
  static Segment make_segment(const Vec3& p0, const Vec3& v0, const Vec3& p1, const Vec3& v1,
                              double t0, double T) {
    Segment s;
    s.t0 = t0;
    s.dur = T;
    const Vec3 dp = p1 - p0;
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    s.coef[0] = p0;
    s.coef[1] = v0;
    s.coef[2] = Vec3::Zero();
    s.coef[3] = (10.0 * dp - (6.0 * v0 + 4.0 * v1) * T) / T3;
    s.coef[4] = (-15.0 * dp + (8.0 * v0 + 7.0 * v1) * T) / T4;
    s.coef[5] = (6.0 * dp - 3.0 * (v0 + v1) * T) / T5;
    return s;
  }

  VehicleParams params_;
  std::vector<Segment> segments_;
  Vec3 first_ = Vec3::Zero(), last_ = Vec3::Zero();
  double total_ = 0.0;
};

// Waypoint files: one "x y z" triple per line, '#' comments allowed.
inline std::vector<Vec3> load_waypoints(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_waypoints: cannot open " + path);
  std::vector<Vec3> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x, y, z;
    if (ls >> x >> y >> z) {
      double extra;
      if (ls >> extra)
        throw std::runtime_error("load_waypoints: extra fields on line " +
                                 std::to_string(lineno));
      pts.push_back({x, y, z});
    } else if (!std::all_of(line.begin(), line.end(),
                            [](unsigned char ch) { return std::isspace(ch); })) {
      throw std::runtime_error("load_waypoints: malformed line " + std::to_string(lineno));
    }
  }
  return pts;
}

}  // namespace spinner
