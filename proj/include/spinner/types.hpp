#pragma once

#include <Eigen/Dense>

namespace spinner {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using StateVec = Eigen::Matrix<double, 13, 1>;
using CostVec = Eigen::Matrix<double, 16, 1>;
using AllocMatrix = Eigen::Matrix<double, 4, 3>;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace spinner
