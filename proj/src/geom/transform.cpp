#include "amc/geom/transform.hpp"

#include <cmath>
#include <stdexcept>

namespace amc::geom {

Mat3 identity3() { return {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}}; }

Mat3 rotation_z(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
}

Mat3 rotation_axis_angle(const Vec3& axis, double radians) {
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (norm == 0.0) {
    throw std::invalid_argument("rotation_axis_angle: zero axis");
  }
  const double x = axis[0] / norm;
  const double y = axis[1] / norm;
  const double z = axis[2] / norm;
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  const double t = 1.0 - c;
  return {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
           {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
           {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
}

PointCloud rigid_transform(const PointCloud& cloud, const Mat3& rotation, const Vec3& translation) {
  // R^T R = I
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) {
        dot += rotation[k][i] * rotation[k][j];
      }
      const double expected = i == j ? 1.0 : 0.0;
      if (!(std::abs(dot - expected) <= kOrthonormalTolerance)) {
        throw std::invalid_argument("rigid_transform: rotation is not orthonormal");
      }
    }
  }
  std::vector<Vec3> moved(cloud.size());
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    const Vec3& p = cloud.position(n);
    for (int i = 0; i < 3; ++i) {
      moved[n][i] = rotation[i][0] * p[0] + rotation[i][1] * p[1] + rotation[i][2] * p[2] + translation[i];
    }
  }
  return PointCloud(std::move(moved), cloud.labels(), cloud.num_classes(), cloud.features());
}

}  // namespace amc::geom
