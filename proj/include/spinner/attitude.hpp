#pragma once

#include <cmath>
#include <stdexcept>

#include "spinner/types.hpp"

// Quaternion attitude math. Hamilton convention, scalar-first [w, x, y, z].
// quat_to_rotation(q) maps body-frame vectors into the world frame.

namespace spinner {

struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static UnitQuaternion identity() { return {}; }

  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n < 1e-12) throw std::domain_error("from_axis_angle: zero axis");
    const double half = 0.5 * angle;
    const double s = std::sin(half) / n;
    return {std::cos(half), axis.x() * s, axis.y() * s, axis.z() * s};
  }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  UnitQuaternion normalized() const {
    const double n = norm();
    if (n < 1e-12) throw std::domain_error("normalized: zero quaternion");
    return {w / n, x / n, y / n, z / n};
  }

  UnitQuaternion conjugate() const { return {w, -x, -y, -z}; }

  Vec4 as_vec() const { return {w, x, y, z}; }

  Vec3 imag() const { return {x, y, z}; }
};

// Hamilton product without normalization; needed where the result is not a
// unit quaternion (attitude kinematics).
inline Vec4 quat_product_raw(const UnitQuaternion& a, const UnitQuaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline UnitQuaternion quat_multiply(const UnitQuaternion& a, const UnitQuaternion& b) {
  const Vec4 p = quat_product_raw(a, b);
  return UnitQuaternion{p(0), p(1), p(2), p(3)}.normalized();
}

// True inverse (conjugate over squared norm) so near-unit inputs stay exact.
inline UnitQuaternion quat_inverse(const UnitQuaternion& q) {
  const double n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
  if (n2 < 1e-24) throw std::domain_error("quat_inverse: zero quaternion");
  return {q.w / n2, -q.x / n2, -q.y / n2, -q.z / n2};
}

inline Mat3 quat_to_rotation(const UnitQuaternion& q_in) {
  const UnitQuaternion q = q_in.normalized();
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

inline UnitQuaternion rotation_to_quat(const Mat3& r) {
  const Mat3 err = r.transpose() * r - Mat3::Identity();
  if (err.cwiseAbs().maxCoeff() > 1e-6 || r.determinant() < 0.0)
    throw std::invalid_argument("rotation_to_quat: matrix is not a rotation");
  // Shepperd's method: pick the largest of the four candidate pivots.
  const double tr = r.trace();
  UnitQuaternion q;
  if (tr > r(0, 0) && tr > r(1, 1) && tr > r(2, 2)) {
    const double s = std::sqrt(1.0 + tr) * 2.0;
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  return q.normalized();
}

inline Vec3 rotate(const UnitQuaternion& q, const Vec3& v) {
  return quat_to_rotation(q) * v;
}

// Attitude error q_ref * q^-1, canonicalized to w >= 0 so the two covers of a
// rotation map to one error.
inline UnitQuaternion attitude_error(const UnitQuaternion& q_ref, const UnitQuaternion& q) {
  UnitQuaternion e = quat_multiply(q_ref, quat_inverse(q));
  if (e.w < 0.0) e = {-e.w, -e.x, -e.y, -e.z};
  return e;
}

struct TiltDecomposition {
  UnitQuaternion yaw;   // rotation about z only: [cos, 0, 0, sin]
  UnitQuaternion tilt;  // zero z component
  bool degenerate = false;
};

// Split an error quaternion as q_err = yaw * tilt. At 180 degrees of tilt the
// yaw factor is undefined; that case is flagged and yaw set to identity.
inline TiltDecomposition tilt_decompose(const UnitQuaternion& q_err) {
  const double s2 = q_err.w * q_err.w + q_err.z * q_err.z;
  if (s2 < 1e-12) {
    return {UnitQuaternion::identity(), q_err, true};
  }
  const double s = std::sqrt(s2);
  TiltDecomposition d;
  d.yaw = {q_err.w / s, 0.0, 0.0, q_err.z / s};
  d.tilt = {s, (q_err.w * q_err.x + q_err.y * q_err.z) / s,
            (q_err.w * q_err.y - q_err.x * q_err.z) / s, 0.0};
  d.degenerate = false;
  return d;
}

struct ReducedAttitudeError {
  Vec4 value = Vec4::Zero();  // [tilt_x, tilt_y, tilt_z (= 0), yaw_z]
  bool degenerate = false;
};

// Error vector for the controller cost: tilt components first so the yaw
// entry can carry a separate (typically zero) weight.
inline ReducedAttitudeError reduced_error_vector(const UnitQuaternion& q_ref,
                                                 const UnitQuaternion& q) {
  const UnitQuaternion e = attitude_error(q_ref, q);
  const TiltDecomposition d = tilt_decompose(e);
  ReducedAttitudeError out;
  out.value = {d.tilt.x, d.tilt.y, d.tilt.z, d.yaw.z};
  out.degenerate = d.degenerate;
  return out;
}

}  // namespace spinner
