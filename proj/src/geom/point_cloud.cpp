#include "amc/geom/point_cloud.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace amc::geom {

PointCloud::PointCloud(std::vector<Vec3> positions, std::vector<Label> labels, std::size_t num_classes,
                       std::optional<Matrix> features)
    : positions_(std::move(positions)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      features_(std::move(features)) {
  if (positions_.empty()) {
    throw std::invalid_argument("PointCloud: at least one point is required");
  }
  if (num_classes_ == 0) {
    throw std::invalid_argument("PointCloud: class count must be at least 1");
  }
  if (labels_.size() != positions_.size()) {
    throw std::invalid_argument("PointCloud: " + std::to_string(labels_.size()) + " labels for " +
                                std::to_string(positions_.size()) + " points");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes_) {
      throw std::invalid_argument("PointCloud: label " + std::to_string(labels_[i]) + " at point " +
                                  std::to_string(i) + " is not below class count " +
                                  std::to_string(num_classes_));
    }
  }
  for (const auto& p : positions_) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
      throw std::invalid_argument("PointCloud: non-finite coordinate");
    }
  }
  if (features_) {
    if (features_->rows != positions_.size()) {
      throw std::invalid_argument("PointCloud: feature rows do not match point count");
    }
    if (features_->cols == 0) {
      throw std::invalid_argument("PointCloud: feature dimension must be positive when present");
    }
  }
}

}  // namespace amc::geom
