#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "coastal/dataset.hpp"

namespace coastal {

/// Parameters of the toy shielding/spillover model used for desk-scale data.
struct SynthOracleParams {
  double base_min = 0.0;
  double base_max = 2.0;
  double alpha = 1.0;  ///< shielding of a protected segment
  double beta = 0.3;   ///< spillover from protected neighboring segments
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-location base depth, drawn from a stream keyed by (seed, location id).
double synth_base_depth(std::int64_t location_id, const SynthOracleParams& params);

/// Fraction of segment s's index-adjacent segments (s-1, s+1) that are protected.
double protected_neighbor_fraction(const ProtectionScenario& scenario, int segment);

/// max(0, base - alpha * protected(s) + beta * protected_neighbor_fraction(s))
/// with s the nearest segment of each location; ordered by location id.
DepthVector synth_oracle(const ProtectionScenario& scenario, const std::vector<CoastalLocation>& locations,
                         const std::vector<SegmentGeometry>& segments, const SynthOracleParams& params);

struct SynthGeometry {
  std::vector<CoastalLocation> locations;  ///< sorted by id, segment_id = nearest segment
  std::vector<SegmentGeometry> segments;
};

/// A wavy coastline split into d_x segments with locations scattered just
/// inland. Coordinates are float-representable.
SynthGeometry make_synthetic_geometry(std::size_t d_x, std::size_t n_locations, std::uint64_t seed);

/// Base scenarios first, then seeded random ones excluding them.
std::vector<ProtectionScenario> synthetic_scenarios(std::size_t d_x, std::size_t n_scenarios, std::uint64_t seed);

Dataset make_synthetic_dataset(std::size_t d_x, std::size_t n_locations, int H, int W, std::size_t n_scenarios,
                               const SynthOracleParams& params);

/// make_synthetic_dataset written to `out_dir`; returns the manifest.
DatasetManifest generate_synthetic_dataset(std::size_t d_x, std::size_t n_locations, int H, int W,
                                           std::size_t n_scenarios, const SynthOracleParams& params,
                                           const std::filesystem::path& out_dir);

}  // namespace coastal
