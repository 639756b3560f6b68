#include "amc/aef/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace amc::aef {

void AefConfig::validate() const {
  if (k < 2) {
    throw std::invalid_argument("AefConfig: K must be at least 2");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("AefConfig: beta must be positive");
  }
  if (!(dup_epsilon > 0.0 && dup_epsilon <= 1e-6)) {
    throw std::invalid_argument("AefConfig: dup_epsilon must lie in (0, 1e-6]");
  }
}

NeighborPartition partition_neighbors(const geom::NeighborList& neighbors, std::span<const geom::Label> labels) {
  NeighborPartition part;
  part.anchor = neighbors.anchor;
  const geom::Label own = labels[neighbors.anchor];
  // Accumulated in neighbor order (ascending distance) so the sums are
  // reproducible regardless of which search produced the list.
  for (std::size_t r = 0; r < neighbors.neighbors.size(); ++r) {
    const std::size_t j = neighbors.neighbors[r];
    if (labels[j] == own) {
      part.intra.push_back(j);
      part.d_plus += neighbors.sq_distances[r];
    } else {
      part.inter.push_back(j);
      part.d_minus += neighbors.sq_distances[r];
    }
  }
  return part;
}

NeighborPartition partition_neighbors(const geom::PointCloud& cloud, std::size_t anchor, std::size_t k,
                                      geom::SearchMethod method) {
  return partition_neighbors(geom::knn(cloud, anchor, k, method), cloud.labels());
}

Closeness closeness(const NeighborPartition& part, double dup_epsilon) {
  Closeness cc;
  cc.cc_plus = static_cast<double>(part.intra.size()) / std::max(part.d_plus, dup_epsilon);
  cc.cc_minus = part.inter.empty() ? 0.0 : static_cast<double>(part.inter.size()) / std::max(part.d_minus, dup_epsilon);
  return cc;
}

double ambiguity(const Closeness& cc, std::size_t intra_count, std::size_t k, double beta) {
  if (intra_count == 0 || intra_count > k) {
    throw std::invalid_argument("ambiguity: intra count " + std::to_string(intra_count) + " outside [1, " +
                                std::to_string(k) + "]");
  }
  if (intra_count == k) {
    return 0.0;
  }
  if (intra_count == 1) {
    return 1.0;
  }
  return 1.0 / (1.0 + std::exp(beta * (cc.cc_plus - cc.cc_minus)));
}

std::vector<NeighborPartition> partition_all(std::span<const geom::Vec3> positions,
                                             std::span<const geom::Label> labels, std::size_t k,
                                             geom::SearchMethod method) {
  if (labels.size() != positions.size()) {
    throw std::invalid_argument("partition_all: label count does not match point count");
  }
  const auto lists = geom::knn_all(positions, k, method);
  std::vector<NeighborPartition> parts;
  parts.reserve(lists.size());
  for (const auto& nl : lists) {
    parts.push_back(partition_neighbors(nl, labels));
  }
  return parts;
}

AmbiguityMap ambiguity_from_partitions(std::span<const NeighborPartition> partitions, const AefConfig& cfg,
                                       std::size_t stage) {
  AmbiguityMap map;
  map.stage = stage;
  map.values.reserve(partitions.size());
  for (const auto& part : partitions) {
    map.values.push_back(ambiguity(closeness(part, cfg.dup_epsilon), part.intra.size(), part.k(), cfg.beta));
  }
  return map;
}

AmbiguityMap ambiguity_map(std::span<const geom::Vec3> positions, std::span<const geom::Label> labels,
                           const AefConfig& cfg, geom::SearchMethod method, std::size_t stage) {
  cfg.validate();
  const auto parts = partition_all(positions, labels, cfg.k, method);
  return ambiguity_from_partitions(parts, cfg, stage);
}

AmbiguityMap ambiguity_map(const geom::PointCloud& cloud, const AefConfig& cfg, geom::SearchMethod method) {
  return ambiguity_map(cloud.positions(), cloud.labels(), cfg, method);
}

}  // namespace amc::aef
