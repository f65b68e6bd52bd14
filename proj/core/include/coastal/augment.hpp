#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "coastal/grid.hpp"

namespace coastal {

struct CutoutConfig {
  int n_patches = 2;
  int patch_size = 60;
  int m = 19;  ///< augmented copies per original
  std::uint64_t seed = 0;

  void validate(int height, int width) const;
};

/// Input map paired with its (shared, never modified) target.
struct TrainingPair {
  SusceptibilityMap input;
  std::shared_ptr<const InundationMap> target;
};

/// Zeroes the half-open square [c - s/2, c - s/2 + s) around `center`,
/// clipped at the grid edges.
void zero_patch(SusceptibilityMap& map, GridCell center, int patch_size);

/// Copy of `map` with cfg.n_patches squares zeroed at uniformly drawn centers.
SusceptibilityMap cutout(const SusceptibilityMap& map, const CutoutConfig& cfg, std::mt19937_64& rng);

/// Per-copy stream seeded from (seed, original index, copy index).
std::mt19937_64 cutout_stream(std::uint64_t seed, std::size_t original, std::size_t copy);

/// Each original followed by its m cutout copies; (m + 1) * n pairs total.
std::vector<TrainingPair> augment_dataset(const std::vector<TrainingPair>& pairs, const CutoutConfig& cfg);

}  // namespace coastal
