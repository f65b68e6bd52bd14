#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "coastal/grid.hpp"
#include "coastal/grid_io.hpp"
#include "coastal/synth.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"

using namespace coastal;

TEST_SUITE("grid") {
  TEST_CASE("corners map to corners") {
    const std::vector<CoastalLocation> locs{{1, 0.0, 1.0, 0}, {2, 1.0, 1.0, 0}, {3, 0.0, 0.0, 0}, {4, 1.0, 0.0, 0}};
    const auto m = build_index_map(locs, 4, 4);
    CHECK(m.cell(1) == GridCell{0, 0});
    CHECK(m.cell(2) == GridCell{0, 3});
    CHECK(m.cell(3) == GridCell{3, 0});
    CHECK(m.cell(4) == GridCell{3, 3});
  }

  TEST_CASE("collision goes to the nearest free cell, ties by smaller i then j") {
    const std::vector<CoastalLocation> locs{{1, 0.0, 0.0, 0}, {2, 1.0, 1.0, 0}, {3, 0.5, 0.5, 0}, {4, 0.5, 0.5, 0}};
    const auto m = build_index_map(locs, 4, 4);
    const GridCell first = m.cell(3);
    // Brute force over free cells.
    std::set<std::pair<int, int>> used{{m.cell(1).i, m.cell(1).j}, {m.cell(2).i, m.cell(2).j}, {first.i, first.j}};
    double best = std::numeric_limits<double>::infinity();
    GridCell expect;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (used.count({i, j})) continue;
        const double d = std::hypot(i - first.i, j - first.j);
        if (d < best - 1e-12) {
          best = d;
          expect = {i, j};
        }
      }
    CHECK(m.cell(4) == expect);
    CHECK(best == 1.0);
  }

  TEST_CASE("capacity, duplicates and unknown ids") {
    std::vector<CoastalLocation> five;
    for (int k = 0; k < 5; ++k) five.push_back({k, k * 0.1, 0.0, 0});
    CHECK_THROWS_AS(build_index_map(five, 2, 2), CapacityError);
    CHECK_THROWS_AS(build_index_map({{1, 0, 0, 0}, {1, 1, 1, 0}}, 4, 4), ConsistencyError);
    const auto m = build_index_map({{1, 0, 0, 0}, {2, 1, 1, 0}}, 4, 4);
    CHECK_THROWS_AS(m.position(7), ConsistencyError);
  }

  TEST_CASE("random layouts are injective") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto g = make_synthetic_geometry(5, 900, seed);
      const auto m = build_index_map(g.locations, 32, 32);
      std::set<std::pair<int, int>> cells;
      for (const auto& c : m.cells()) cells.insert({c.i, c.j});
      CHECK(cells.size() == 900);
    }
  }

  TEST_CASE("susceptibility encoding") {
    const std::vector<CoastalLocation> locs{{10, 0.0, 0.0, 0}, {11, 1.0, 1.0, 1}};
    const auto m = build_index_map(locs, 4, 4);
    const auto x = encode_susceptibility(parse_scenario("10"), locs, m);
    CHECK(x(m.cell(10).i, m.cell(10).j) == 1);
    CHECK(x(m.cell(11).i, m.cell(11).j) == -1);
    int nonzero = 0;
    for (auto v : x.cells()) nonzero += v != 0;
    CHECK(nonzero == 2);
    CHECK_THROWS_AS(encode_susceptibility(parse_scenario("1"), locs, m), ConsistencyError);
  }

  TEST_CASE("nearest segment agrees with brute-force point-to-edge distances") {
    const auto g = make_synthetic_geometry(4, 200, 8);
    auto brute = [&](const CoastalLocation& loc) {
      double best = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (const auto& s : g.segments) {
        for (std::size_t v = 0; v + 1 < s.vertices.size(); ++v) {
          const auto& a = s.vertices[v];
          const auto& b = s.vertices[v + 1];
          const double dx = b.lon - a.lon, dy = b.lat - a.lat;
          double t = ((loc.lon - a.lon) * dx + (loc.lat - a.lat) * dy) / (dx * dx + dy * dy);
          t = std::clamp(t, 0.0, 1.0);
          const double d = std::hypot(loc.lon - a.lon - t * dx, loc.lat - a.lat - t * dy);
          if (d < best) {
            best = d;
            arg = s.segment_id;
          }
        }
      }
      return arg;
    };
    for (const auto& loc : g.locations) REQUIRE(nearest_segment(loc, g.segments) == brute(loc));
    const SegmentGeometry line{0, {{0.0, 0.0}, {2.0, 0.0}}};
    CHECK(distance_to_polyline({1.0, 0.5}, line) == doctest::Approx(0.5));
    CHECK(distance_to_polyline({3.0, 0.0}, line) == doctest::Approx(1.0));
  }

  TEST_CASE("depth codec round trip") {
    std::mt19937_64 rng(4);
    const auto g = make_synthetic_geometry(3, 10, 2);
    const auto m = build_index_map(g.locations, 16, 16);
    std::uniform_real_distribution<float> u(0.0f, 3.0f);
    for (int t = 0; t < 20; ++t) {
      DepthVector y(10);
      for (auto& v : y) v = u(rng);
      const auto map = encode_inundation(y, m);
      CHECK(extract_depths(map, m) == y);
      std::size_t masked = 0;
      for (auto b : map.mask.cells()) masked += b;
      CHECK(masked == 10);
    }
    CHECK_THROWS_AS(encode_inundation(DepthVector(9), m), ConsistencyError);
  }

  TEST_CASE("binary and base64 serialization") {
    InundationMap map{Grid<float>(3, 5), Grid<std::uint8_t>(3, 5)};
    map.depth(1, 2) = 1.25f;
    map.mask(1, 2) = 1;
    map.mask(2, 4) = 1;
    const auto bytes = serialize_grid(map);
    CHECK(bytes.size() == 8 * 4 + 15 * 4 + 2);
    CHECK(deserialize_grid(bytes) == map);
    auto broken = bytes;
    broken[0] ^= 0xff;
    CHECK_THROWS_AS(deserialize_grid(broken), ParseError);
    CHECK(base64_encode({'M', 'a', 'n'}) == "TWFu");
    CHECK(base64_encode({'M', 'a'}) == "TWE=");
    CHECK(base64_decode("TWE=") == std::vector<std::uint8_t>{'M', 'a'});
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
    std::ostringstream csv;
    write_grid_csv(csv, map);
    CHECK(csv.str().find("1.25") != std::string::npos);
  }
}
