#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "amc/net/model.hpp"

namespace amc::io {

inline constexpr char kCheckpointMagic[4] = {'A', 'M', 'C', '3'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers little-endian:
///   "AMC3", u32 version, u64 config length, config text,
///   then per tensor until end of file:
///   u32 name length, name, u32 rank, u64 dims[rank], f64 values (LE).
/// The config text holds the config-file keys only; fields without a key
/// (ratio, group_k, predictor widths, ...) load with their defaults.
void save_checkpoint(std::ostream& out, const net::Model& model);
void save_checkpoint(const std::filesystem::path& path, const net::Model& model);

/// Throws std::invalid_argument for malformed or truncated input.
net::Model load_checkpoint(std::istream& in);
net::Model load_checkpoint(const std::filesystem::path& path);

}  // namespace amc::io
