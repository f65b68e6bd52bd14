#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "coastal/errors.hpp"
#include "coastal/scenario.hpp"

namespace coastal {

/// Dense row-major H x W raster.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width),
        cells_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill) {
    if (height < 1 || width < 1) {
      throw ConfigError("grid dimensions must be positive");
    }
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return cells_.size(); }

  T& operator()(int i, int j) { return cells_[index(i, j)]; }
  const T& operator()(int i, int j) const { return cells_[index(i, j)]; }

  std::vector<T>& cells() noexcept { return cells_; }
  const std::vector<T>& cells() const noexcept { return cells_; }

  bool same_shape(int h, int w) const noexcept { return height_ == h && width_ == w; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(j);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> cells_;
};

struct CoastalLocation {
  std::int64_t id = 0;
  double lon = 0.0;
  double lat = 0.0;
  int segment_id = 0;  ///< nearest shoreline segment
};

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

/// One candidate shoreline stretch as a polyline (>= 2 vertices).
struct SegmentGeometry {
  int segment_id = 0;
  std::vector<LonLat> vertices;
};

struct GridCell {
  int i = 0;
  int j = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Injective map from location id to grid cell. Entries are kept sorted by
/// location id; depth vectors use the same order.
class GridIndexMap {
 public:
  GridIndexMap() = default;
  GridIndexMap(int height, int width, std::vector<std::int64_t> ids, std::vector<GridCell> cells);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return ids_.size(); }

  const std::vector<std::int64_t>& ids() const noexcept { return ids_; }
  const std::vector<GridCell>& cells() const noexcept { return cells_; }

  /// Position of `id` in the id-sorted order; throws ConsistencyError if absent.
  std::size_t position(std::int64_t id) const;
  GridCell cell(std::int64_t id) const { return cells_[position(id)]; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::int64_t> ids_;
  std::vector<GridCell> cells_;
};

/// Values in {-1, 0, +1}: -1 unprotected, +1 protected, 0 background.
using SusceptibilityMap = Grid<std::int8_t>;

/// Peak depths per location, ordered by location id.
using DepthVector = std::vector<float>;

struct InundationMap {
  Grid<float> depth;
  Grid<std::uint8_t> mask;

  friend bool operator==(const InundationMap&, const InundationMap&) = default;
};

/// Bins lon into `width` and lat into `height` equal-width bins over the
/// locations' bounding box (row 0 = northernmost). Collisions move the
/// later id to the nearest free cell (Euclidean, ties by smaller i then j).
GridIndexMap build_index_map(const std::vector<CoastalLocation>& locations, int height, int width);

SusceptibilityMap encode_susceptibility(const ProtectionScenario& scenario,
                                        const std::vector<CoastalLocation>& locations,
                                        const GridIndexMap& index_map);

/// Point-to-polyline distance in raw (lon, lat) space.
double distance_to_polyline(const LonLat& p, const SegmentGeometry& segment);

/// Segment closest to the location; ties go to the smaller segment id.
int nearest_segment(const CoastalLocation& location, const std::vector<SegmentGeometry>& segments);

InundationMap encode_inundation(const DepthVector& depths, const GridIndexMap& index_map);

/// values[k] = grid[cell of ids()[k]]. No clamping.
DepthVector extract_depths(const Grid<float>& grid, const GridIndexMap& index_map);
inline DepthVector extract_depths(const InundationMap& map, const GridIndexMap& index_map) {
  return extract_depths(map.depth, index_map);
}

}  // namespace coastal
