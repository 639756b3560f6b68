#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "amc/geom/point_cloud.hpp"

namespace amc::geom {

enum class SceneKind { TwoRooms, PlanarBoundary, CheckerColumns };

std::string_view to_string(SceneKind kind);
/// Parses "two-rooms", "planar-boundary" or "checker-columns".
SceneKind parse_scene_kind(std::string_view text);

/// Synthetic labeled scene description.
///
/// - planar-boundary: class slabs stacked along x on a cubic lattice of
///   `lattice_step` spacing, separated by planes x = const. 2 or 3 classes.
/// - two-rooms: floor (0), walls including the dividing wall (1) and one box
///   of furniture per room (2). Always 3 classes.
/// - checker-columns: vertical columns on a grid, column class alternating
///   as (ix + iy) mod classes. 2 to 8 classes.
struct SceneSpec {
  SceneKind kind = SceneKind::PlanarBoundary;
  std::size_t points_per_class = 1000;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t classes = 0;  // 0 selects the kind's default
  double lattice_step = 0.05;
};

inline constexpr std::size_t kMinPointsPerClass = 8;

/// Deterministic per spec (seeded, portable RNG). Throws
/// std::invalid_argument for invalid specs.
PointCloud synth_scene(const SceneSpec& spec);

/// Number of classes synth_scene will produce for a spec.
std::size_t scene_class_count(const SceneSpec& spec);

}  // namespace amc::geom
