#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amc/geom/neighbors.hpp"
#include "amc/geom/point_cloud.hpp"

namespace amc::aef {

/// A point's K-neighborhood split by label agreement with the anchor.
/// `intra` always contains the anchor itself.
struct NeighborPartition {
  std::size_t anchor = 0;
  std::vector<std::size_t> intra;
  std::vector<std::size_t> inter;
  double d_plus = 0.0;   // sum of squared distances over intra
  double d_minus = 0.0;  // sum of squared distances over inter

  std::size_t k() const { return intra.size() + inter.size(); }
};

/// Count-over-squared-distance compactness with intra and inter neighbors.
struct Closeness {
  double cc_plus = 0.0;
  double cc_minus = 0.0;
};

struct AefConfig {
  std::size_t k = 24;
  double beta = 0.04;
  double dup_epsilon = 1e-9;

  void validate() const;
};

struct AmbiguityMap {
  std::vector<double> values;
  std::size_t stage = 0;
};

/// Splits a neighbor list by label equality with its anchor.
NeighborPartition partition_neighbors(const geom::NeighborList& neighbors, std::span<const geom::Label> labels);
NeighborPartition partition_neighbors(const geom::PointCloud& cloud, std::size_t anchor, std::size_t k,
                                      geom::SearchMethod method = geom::SearchMethod::Auto);

/// cc+ = |intra| / max(d+, eps); cc- = |inter| / max(d-, eps), or 0 when
/// there are no inter neighbors.
Closeness closeness(const NeighborPartition& part, double dup_epsilon = 1e-9);

/// Piecewise ambiguity: 0 when every neighbor is intra, 1 when only the
/// anchor is, otherwise 1 / (1 + exp(beta (cc+ - cc-))).
double ambiguity(const Closeness& cc, std::size_t intra_count, std::size_t k, double beta);

/// Partitions for every point of a labeled position set.
std::vector<NeighborPartition> partition_all(std::span<const geom::Vec3> positions,
                                             std::span<const geom::Label> labels, std::size_t k,
                                             geom::SearchMethod method = geom::SearchMethod::Auto);

/// Ambiguity of every point given precomputed partitions.
AmbiguityMap ambiguity_from_partitions(std::span<const NeighborPartition> partitions, const AefConfig& cfg,
                                       std::size_t stage = 0);

AmbiguityMap ambiguity_map(std::span<const geom::Vec3> positions, std::span<const geom::Label> labels,
                           const AefConfig& cfg, geom::SearchMethod method = geom::SearchMethod::Auto,
                           std::size_t stage = 0);
AmbiguityMap ambiguity_map(const geom::PointCloud& cloud, const AefConfig& cfg,
                           geom::SearchMethod method = geom::SearchMethod::Auto);

}  // namespace amc::aef
