#pragma once

#include <array>

#include "amc/geom/point_cloud.hpp"

namespace amc::geom {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline constexpr double kOrthonormalTolerance = 1e-9;

Mat3 identity3();
/// Counter-clockwise rotation about +z.
Mat3 rotation_z(double radians);
/// Rotation from a unit axis and angle (Rodrigues).
Mat3 rotation_axis_angle(const Vec3& axis, double radians);

/// p -> R p + t. Throws std::invalid_argument unless R is orthonormal within
/// kOrthonormalTolerance. Features and labels are carried over unchanged.
PointCloud rigid_transform(const PointCloud& cloud, const Mat3& rotation, const Vec3& translation);

}  // namespace amc::geom
