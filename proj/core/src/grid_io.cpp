#include "coastal/grid_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace coastal {

namespace {

static_assert(std::endian::native == std::endian::little,
              "grid serialization assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::vector<std::uint8_t> serialize_grid(const InundationMap& map) {
  const int h = map.depth.height();
  const int w = map.depth.width();
  if (!map.mask.same_shape(h, w)) {
    throw ConsistencyError("depth grid and mask differ in shape");
  }
  const std::size_t n = map.depth.size();
  std::uint32_t d_y = 0;
  for (auto m : map.mask.cells()) d_y += m ? 1u : 0u;

  std::vector<std::uint8_t> out;
  out.reserve(32 + 4 * n + (n + 7) / 8);
  put_u32(out, kGridMagic);
  put_u32(out, kGridVersion);
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, d_y);
  for (int r = 0; r < 3; ++r) put_u32(out, 0);

  const std::size_t values_at = out.size();
  out.resize(values_at + 4 * n);
  std::memcpy(out.data() + values_at, map.depth.cells().data(), 4 * n);

  std::vector<std::uint8_t> bits((n + 7) / 8, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (map.mask.cells()[k]) bits[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
  }
  out.insert(out.end(), bits.begin(), bits.end());
  return out;
}

InundationMap deserialize_grid(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 32) throw ParseError("grid blob shorter than its header");
  if (get_u32(bytes.data()) != kGridMagic) throw ParseError("grid blob has a bad magic number");
  if (get_u32(bytes.data() + 4) != kGridVersion) throw ParseError("unsupported grid version");
  const int h = static_cast<int>(get_u32(bytes.data() + 8));
  const int w = static_cast<int>(get_u32(bytes.data() + 12));
  const std::uint32_t d_y = get_u32(bytes.data() + 16);
  if (h < 1 || w < 1) throw ParseError("grid blob has empty dimensions");
  const std::size_t n = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  if (bytes.size() != 32 + 4 * n + (n + 7) / 8) {
    throw ParseError("grid blob size does not match its header");
  }
  InundationMap map{Grid<float>(h, w, 0.0f), Grid<std::uint8_t>(h, w, 0)};
  std::memcpy(map.depth.cells().data(), bytes.data() + 32, 4 * n);
  const std::uint8_t* bits = bytes.data() + 32 + 4 * n;
  std::uint32_t count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const bool on = (bits[k / 8] >> (k % 8)) & 1u;
    map.mask.cells()[k] = on ? 1 : 0;
    count += on ? 1u : 0u;
  }
  if (count != d_y) throw ParseError("grid mask population does not match header d_y");
  return map;
}

void write_grid_file(const std::string& path, const InundationMap& map) {
  const auto bytes = serialize_grid(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

InundationMap read_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_grid(bytes);
}

void write_grid_csv(std::ostream& out, const InundationMap& map) {
  out << "i,j,value\n" << std::setprecision(9);
  for (int i = 0; i < map.depth.height(); ++i) {
    for (int j = 0; j < map.depth.width(); ++j) {
      if (map.mask(i, j)) out << i << ',' << j << ',' << map.depth(i, j) << '\n';
    }
  }
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve(4 * ((bytes.size() + 2) / 3));
  std::size_t k = 0;
  for (; k + 2 < bytes.size(); k += 3) {
    const std::uint32_t v = (bytes[k] << 16) | (bytes[k + 1] << 8) | bytes[k + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - k;
  if (rest == 1) {
    const std::uint32_t v = bytes[k] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[k] << 16) | (bytes[k + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lookup{};
  lookup.fill(-1);
  for (int c = 0; c < 64; ++c) lookup[static_cast<unsigned char>(kAlphabet[c])] = c;

  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    const int v = lookup[static_cast<unsigned char>(ch)];
    if (v < 0) throw ParseError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFFu));
    }
  }
  return out;
}

}  // namespace coastal
