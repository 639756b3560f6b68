#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "amc/matrix.hpp"

namespace amc::geom {

using Vec3 = std::array<double, 3>;
using Label = std::uint32_t;

/// Squared Euclidean distance. Every neighbor search in the library goes
/// through this function so that tie comparisons are bit-identical across
/// the brute-force and kd-tree paths.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

/// Labeled point set. Immutable after construction; the constructor
/// validates every invariant.
class PointCloud {
 public:
  PointCloud(std::vector<Vec3> positions, std::vector<Label> labels, std::size_t num_classes,
             std::optional<Matrix> features = std::nullopt);

  std::size_t size() const { return positions_.size(); }
  std::size_t num_classes() const { return num_classes_; }

  const std::vector<Vec3>& positions() const { return positions_; }
  const std::vector<Label>& labels() const { return labels_; }
  const Vec3& position(std::size_t i) const { return positions_[i]; }
  Label label(std::size_t i) const { return labels_[i]; }

  bool has_features() const { return features_.has_value(); }
  /// Feature dimension, 0 when the cloud carries no features.
  std::size_t feature_dim() const { return features_ ? features_->cols : 0; }
  const std::optional<Matrix>& features() const { return features_; }

  bool operator==(const PointCloud&) const = default;

 private:
  std::vector<Vec3> positions_;
  std::vector<Label> labels_;
  std::size_t num_classes_;
  std::optional<Matrix> features_;
};

}  // namespace amc::geom
