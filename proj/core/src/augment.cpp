#include "coastal/augment.hpp"

#include <algorithm>
#include <string>

namespace coastal {

void CutoutConfig::validate(int height, int width) const {
  if (n_patches < 1) throw ConfigError("augment.n_patches must be >= 1");
  if (patch_size < 1) throw ConfigError("augment.patch_size must be >= 1");
  if (patch_size > std::min(height, width)) {
    throw ConfigError("augment.patch_size " + std::to_string(patch_size) +
                      " exceeds the grid's smaller side");
  }
  if (m < 0) throw ConfigError("augment.m must be >= 0");
}

void zero_patch(SusceptibilityMap& map, GridCell center, int patch_size) {
  const int i0 = std::max(center.i - patch_size / 2, 0);
  const int j0 = std::max(center.j - patch_size / 2, 0);
  const int i1 = std::min(center.i - patch_size / 2 + patch_size, map.height());
  const int j1 = std::min(center.j - patch_size / 2 + patch_size, map.width());
  for (int i = i0; i < i1; ++i) {
    for (int j = j0; j < j1; ++j) map(i, j) = 0;
  }
}

SusceptibilityMap cutout(const SusceptibilityMap& map, const CutoutConfig& cfg, std::mt19937_64& rng) {
  cfg.validate(map.height(), map.width());
  SusceptibilityMap out = map;
  std::uniform_int_distribution<int> row(0, map.height() - 1);
  std::uniform_int_distribution<int> col(0, map.width() - 1);
  for (int p = 0; p < cfg.n_patches; ++p) {
    const int i = row(rng);
    const int j = col(rng);
    zero_patch(out, {i, j}, cfg.patch_size);
  }
  return out;
}

std::mt19937_64 cutout_stream(std::uint64_t seed, std::size_t original, std::size_t copy) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(original), static_cast<std::uint32_t>(copy)};
  return std::mt19937_64(seq);
}

std::vector<TrainingPair> augment_dataset(const std::vector<TrainingPair>& pairs, const CutoutConfig& cfg) {
  if (cfg.m < 0) throw ConfigError("augment.m must be >= 0");
  std::vector<TrainingPair> out;
  out.reserve(pairs.size() * static_cast<std::size_t>(cfg.m + 1));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.push_back(pairs[k]);
    for (int c = 1; c <= cfg.m; ++c) {
      auto rng = cutout_stream(cfg.seed, k, static_cast<std::size_t>(c));
      out.push_back({cutout(pairs[k].input, cfg, rng), pairs[k].target});
    }
  }
  return out;
}

}  // namespace coastal
