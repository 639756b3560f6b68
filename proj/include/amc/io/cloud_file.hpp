#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "amc/geom/point_cloud.hpp"

namespace amc::io {

/// ASCII cloud: one point per line, `x y z [feat...] label`, whitespace
/// separated. Lines starting with `#` and blank lines are ignored. Every
/// point line must carry the same number of tokens. The class count is the
/// largest label + 1 unless given.
geom::PointCloud read_cloud(std::istream& in, std::optional<std::size_t> num_classes = std::nullopt);
geom::PointCloud read_cloud_file(const std::filesystem::path& path,
                                 std::optional<std::size_t> num_classes = std::nullopt);

/// Writes coordinates and features with %.17g, so reading back is exact.
void write_cloud(std::ostream& out, const geom::PointCloud& cloud);
void write_cloud_file(const std::filesystem::path& path, const geom::PointCloud& cloud);

}  // namespace amc::io
