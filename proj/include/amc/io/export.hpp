#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "amc/geom/point_cloud.hpp"
#include "amc/metrics/metrics.hpp"

namespace amc::io {

/// `index,x,y,z,ambiguity,margin` rows after a header line, %.9g numbers.
void write_ambiguity_csv(std::ostream& out, std::span<const geom::Vec3> positions, std::span<const double> ambiguity,
                         std::span<const double> margins);

/// Red for ambiguity 1, blue for 0: c = round(255 a), (c, 0, 255 - c).
std::array<std::uint8_t, 3> ambiguity_color(double a);

struct PlyVertex {
  geom::Vec3 position{};
  std::array<std::uint8_t, 3> rgb{};
};

/// ASCII PLY with float x, y, z and uchar red, green, blue.
void write_ply(std::ostream& out, std::span<const geom::Vec3> positions, std::span<const double> ambiguity);
void write_ply_file(const std::filesystem::path& path, std::span<const geom::Vec3> positions,
                    std::span<const double> ambiguity);

/// Reads the vertex element of an ASCII PLY with at least x, y, z, red,
/// green and blue properties, in any order.
std::vector<PlyVertex> read_ply(std::istream& in);
std::vector<PlyVertex> read_ply_file(const std::filesystem::path& path);

/// `index,label,ambiguity` rows.
void write_prediction_csv(std::ostream& out, std::span<const geom::Label> labels, std::span<const double> ambiguity);

/// Overall scores plus one row per ambiguity bin:
/// `subset,points,oa,macc,miou`.
void write_breakdown_csv(std::ostream& out, const metrics::Scores& overall, std::size_t total,
                         std::span<const metrics::BinReport> bins);

}  // namespace amc::io
