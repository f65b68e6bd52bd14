#pragma once

#include <filesystem>
#include <string>

#include "coastal/caspian.hpp"
#include "coastal/dataset.hpp"
#include "coastal/grid.hpp"

namespace coastal::tools {

/// A trained model directory: checkpoint bundle (manifest.json, tensors/)
/// whose metadata carries d_x, d_y, grid size and the split, plus a copy of
/// locations.csv.
struct ModelDir {
  LoadedCheckpoint checkpoint;
  std::vector<CoastalLocation> locations;
  GridIndexMap index_map;
  std::size_t d_x = 0;
  SplitSpec split;

  const CaspianModel<float>& model() const { return checkpoint.model; }
  const std::string& fingerprint() const { return checkpoint.fingerprint; }
};

/// Loads `dir`; locations come from `data_dir` when given, else from the
/// copy stored next to the checkpoint.
ModelDir load_model_dir(const std::filesystem::path& dir, const std::filesystem::path& data_dir = {});

/// Metadata keys recorded next to the checkpoint.
std::string model_dir_metadata(const Dataset& data, const SplitSpec& split, const std::string& train_json,
                               const std::string& augment_json);

/// Full-resolution prediction for one scenario.
Grid<float> predict_grid(const ModelDir& m, const ProtectionScenario& scenario);
DepthVector predict_depths(const ModelDir& m, const ProtectionScenario& scenario);

/// Checks the scenario length against the model; throws ConsistencyError
/// naming both lengths.
void check_scenario_length(const ModelDir& m, const ProtectionScenario& scenario);

}  // namespace coastal::tools
