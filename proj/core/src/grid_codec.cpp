#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "coastal/grid.hpp"

namespace coastal {

GridIndexMap::GridIndexMap(int height, int width, std::vector<std::int64_t> ids,
                           std::vector<GridCell> cells)
    : height_(height), width_(width), ids_(std::move(ids)), cells_(std::move(cells)) {
  if (ids_.size() != cells_.size()) {
    throw ConsistencyError("index map ids and cells differ in length");
  }
  if (!std::is_sorted(ids_.begin(), ids_.end()) ||
      std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) {
    throw ConsistencyError("index map ids must be unique and ascending");
  }
}

std::size_t GridIndexMap::position(std::int64_t id) const {
  const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) {
    throw ConsistencyError("location id " + std::to_string(id) + " missing from index map");
  }
  return static_cast<std::size_t>(it - ids_.begin());
}

namespace {

int bin(double value, double lo, double hi, int bins) {
  if (!(hi > lo)) return 0;
  const double t = (value - lo) / (hi - lo);
  const int b = static_cast<int>(std::floor(t * bins));
  return std::clamp(b, 0, bins - 1);
}

// Nearest unoccupied cell to (ci, cj) by squared Euclidean distance, ties to
// smaller i then j. Scans Chebyshev rings outward until no farther ring can win.
GridCell nearest_free(const Grid<std::uint8_t>& occupied, int ci, int cj) {
  const int h = occupied.height();
  const int w = occupied.width();
  long best_d2 = std::numeric_limits<long>::max();
  GridCell best{-1, -1};
  const int max_r = std::max(h, w);
  for (int r = 1; r <= max_r; ++r) {
    for (int i = ci - r; i <= ci + r; ++i) {
      if (i < 0 || i >= h) continue;
      const bool edge_row = (i == ci - r || i == ci + r);
      const int step = edge_row ? 1 : 2 * r;
      for (int j = cj - r; j <= cj + r; j += step) {
        if (j < 0 || j >= w || occupied(i, j)) continue;
        const long di = i - ci;
        const long dj = j - cj;
        const long d2 = di * di + dj * dj;
        if (d2 < best_d2 || (d2 == best_d2 && (i < best.i || (i == best.i && j < best.j)))) {
          best_d2 = d2;
          best = {i, j};
        }
      }
    }
    const long next = static_cast<long>(r + 1) * (r + 1);
    if (best.i >= 0 && best_d2 < next) break;
  }
  return best;
}

}  // namespace

GridIndexMap build_index_map(const std::vector<CoastalLocation>& locations, int height, int width) {
  if (height < 2 || width < 2) {
    throw ConfigError("index map grid must be at least 2x2");
  }
  const auto cells_total = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  if (locations.size() > cells_total) {
    throw CapacityError(std::to_string(locations.size()) + " locations do not fit into " +
                        std::to_string(height) + "x" + std::to_string(width) + " cells");
  }

  std::vector<std::size_t> order(locations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return locations[a].id < locations[b].id; });

  double lon_lo = std::numeric_limits<double>::infinity();
  double lon_hi = -lon_lo;
  double lat_lo = lon_lo;
  double lat_hi = -lon_lo;
  for (const auto& loc : locations) {
    lon_lo = std::min(lon_lo, loc.lon);
    lon_hi = std::max(lon_hi, loc.lon);
    lat_lo = std::min(lat_lo, loc.lat);
    lat_hi = std::max(lat_hi, loc.lat);
  }

  Grid<std::uint8_t> occupied(height, width, 0);
  std::vector<std::int64_t> ids;
  std::vector<GridCell> cells;
  ids.reserve(locations.size());
  cells.reserve(locations.size());
  for (std::size_t k : order) {
    const auto& loc = locations[k];
    if (!ids.empty() && ids.back() == loc.id) {
      throw ConsistencyError("duplicate location id " + std::to_string(loc.id));
    }
    GridCell cell{bin(lat_hi - loc.lat, 0.0, lat_hi - lat_lo, height),
                  bin(loc.lon, lon_lo, lon_hi, width)};
    if (occupied(cell.i, cell.j)) {
      cell = nearest_free(occupied, cell.i, cell.j);
    }
    occupied(cell.i, cell.j) = 1;
    ids.push_back(loc.id);
    cells.push_back(cell);
  }
  return GridIndexMap(height, width, std::move(ids), std::move(cells));
}

SusceptibilityMap encode_susceptibility(const ProtectionScenario& scenario,
                                        const std::vector<CoastalLocation>& locations,
                                        const GridIndexMap& index_map) {
  SusceptibilityMap out(index_map.height(), index_map.width(), 0);
  for (const auto& loc : locations) {
    if (loc.segment_id < 0 || static_cast<std::size_t>(loc.segment_id) >= scenario.size()) {
      throw ConsistencyError("location " + std::to_string(loc.id) + " references segment " +
                             std::to_string(loc.segment_id) + " outside the scenario");
    }
    const GridCell c = index_map.cell(loc.id);
    out(c.i, c.j) = scenario[static_cast<std::size_t>(loc.segment_id)] ? 1 : -1;
  }
  return out;
}

double distance_to_polyline(const LonLat& p, const SegmentGeometry& segment) {
  const auto& v = segment.vertices;
  if (v.empty()) {
    throw ConfigError("segment " + std::to_string(segment.segment_id) + " has no vertices");
  }
  double best = std::hypot(p.lon - v[0].lon, p.lat - v[0].lat);
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const double ax = v[k].lon, ay = v[k].lat;
    const double dx = v[k + 1].lon - ax, dy = v[k + 1].lat - ay;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
      t = std::clamp(((p.lon - ax) * dx + (p.lat - ay) * dy) / len2, 0.0, 1.0);
    }
    best = std::min(best, std::hypot(p.lon - (ax + t * dx), p.lat - (ay + t * dy)));
  }
  return best;
}

int nearest_segment(const CoastalLocation& location, const std::vector<SegmentGeometry>& segments) {
  if (segments.empty()) {
    throw ConfigError("nearest_segment needs at least one segment");
  }
  const LonLat p{location.lon, location.lat};
  double best_d = std::numeric_limits<double>::infinity();
  int best_id = std::numeric_limits<int>::max();
  for (const auto& seg : segments) {
    const double d = distance_to_polyline(p, seg);
    if (d < best_d || (d == best_d && seg.segment_id < best_id)) {
      best_d = d;
      best_id = seg.segment_id;
    }
  }
  return best_id;
}

InundationMap encode_inundation(const DepthVector& depths, const GridIndexMap& index_map) {
  if (depths.size() != index_map.size()) {
    throw ConsistencyError("depth vector has " + std::to_string(depths.size()) +
                           " entries but the index map has " + std::to_string(index_map.size()));
  }
  InundationMap out{Grid<float>(index_map.height(), index_map.width(), 0.0f),
                    Grid<std::uint8_t>(index_map.height(), index_map.width(), 0)};
  const auto& cells = index_map.cells();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    out.depth(cells[k].i, cells[k].j) = depths[k];
    out.mask(cells[k].i, cells[k].j) = 1;
  }
  return out;
}

DepthVector extract_depths(const Grid<float>& grid, const GridIndexMap& index_map) {
  if (!grid.same_shape(index_map.height(), index_map.width())) {
    throw ConsistencyError("grid is " + std::to_string(grid.height()) + "x" +
                           std::to_string(grid.width()) + " but the index map expects " +
                           std::to_string(index_map.height()) + "x" +
                           std::to_string(index_map.width()));
  }
  DepthVector out;
  out.reserve(index_map.size());
  for (const auto& c : index_map.cells()) out.push_back(grid(c.i, c.j));
  return out;
}

}  // namespace coastal
