#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "coastal/grid.hpp"

namespace coastal {

/// Binary grid layout, little-endian throughout:
///   8 x uint32 header: magic "GRID", version, H, W, d_y, reserved x3
///   H*W float32 values, row-major
///   ceil(H*W/8) mask bytes, row-major bitset, least significant bit first
inline constexpr std::uint32_t kGridMagic = 0x44495247u;
inline constexpr std::uint32_t kGridVersion = 1;

std::vector<std::uint8_t> serialize_grid(const InundationMap& map);
InundationMap deserialize_grid(const std::vector<std::uint8_t>& bytes);

void write_grid_file(const std::string& path, const InundationMap& map);
InundationMap read_grid_file(const std::string& path);

/// Masked cells as "i,j,value" rows with a header line.
void write_grid_csv(std::ostream& out, const InundationMap& map);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace coastal
