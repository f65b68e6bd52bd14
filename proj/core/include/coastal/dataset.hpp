#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coastal/augment.hpp"
#include "coastal/grid.hpp"
#include "coastal/scenario.hpp"

namespace coastal {

struct DatasetManifest {
  int schema_version = 1;
  std::size_t d_x = 0;
  std::size_t d_y = 0;
  int H = 0;
  int W = 0;
  std::size_t scenario_count = 0;
  std::vector<std::string> files;
  std::string segment_ordering = "bit k of a scenario bitstring (leftmost = 0) protects segment_id k";
  std::string source = "unspecified";
  /// Free-form JSON object describing how the data was produced.
  std::string provenance_json = "{}";
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);

struct Sample {
  std::string scenario_id;
  ProtectionScenario scenario;
  DepthVector depths;  ///< ordered by location id
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<CoastalLocation> locations;  ///< sorted by id
  std::vector<SegmentGeometry> segments;   ///< sorted by segment_id
  std::vector<Sample> samples;
};

/// Reads manifest.json, locations.csv, segments.csv, scenarios.csv and
/// depths/<scenario_id>.csv. Every inconsistency is a LoadError.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the same layout; floats use 9 significant digits.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

void write_locations_csv(const std::vector<CoastalLocation>& locations, const std::filesystem::path& file);
std::vector<CoastalLocation> read_locations_csv(const std::filesystem::path& file);

struct SplitSpec {
  std::size_t train = 112;
  std::size_t val = 12;
  std::size_t test = 18;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Seeded permutation of 0..n-1 sliced into consecutive train/val/test runs.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

struct DatasetSplit {
  std::vector<Sample> train, val, test;
  SplitIndices indices;
};

DatasetSplit split_dataset(const std::vector<Sample>& samples, const SplitSpec& spec);

/// Index map over the dataset's locations at its grid size.
GridIndexMap dataset_index_map(const Dataset& data);

std::vector<TrainingPair> make_training_pairs(const std::vector<Sample>& samples,
                                              const std::vector<CoastalLocation>& locations,
                                              const GridIndexMap& index_map);

}  // namespace coastal
