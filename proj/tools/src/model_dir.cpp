#include "model_dir.hpp"

#include "coastal/errors.hpp"
#include "coastal/trainer.hpp"
#include "json.hpp"

namespace coastal::tools {

using json = nlohmann::json;

ModelDir load_model_dir(const std::filesystem::path& dir, const std::filesystem::path& data_dir) {
  ModelDir m{load_checkpoint(dir), {}, {}, 0, {}};
  json meta = json::parse(m.checkpoint.metadata_json);
  try {
    m.d_x = meta.at("d_x").get<std::size_t>();
    if (meta.contains("split")) {
      const json& s = meta["split"];
      m.split.train = s.at("train").get<std::size_t>();
      m.split.val = s.at("val").get<std::size_t>();
      m.split.test = s.at("test").get<std::size_t>();
      m.split.seed = s.at("seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("model metadata: ") + e.what());
  }
  m.locations = data_dir.empty() ? read_locations_csv(dir / "locations.csv")
                                 : read_locations_csv(data_dir / "locations.csv");
  const std::size_t d_y = meta.value("d_y", m.locations.size());
  if (m.locations.size() != d_y) {
    throw LoadError("model expects " + std::to_string(d_y) + " locations, found " + std::to_string(m.locations.size()));
  }
  const ModelConfig& cfg = m.checkpoint.model.config();
  m.index_map = build_index_map(m.locations, cfg.H, cfg.W);
  return m;
}

std::string model_dir_metadata(const Dataset& data, const SplitSpec& split, const std::string& train_json,
                               const std::string& augment_json) {
  json j;
  j["d_x"] = data.manifest.d_x;
  j["d_y"] = data.manifest.d_y;
  j["H"] = data.manifest.H;
  j["W"] = data.manifest.W;
  j["split"] = {{"train", split.train}, {"val", split.val}, {"test", split.test}, {"seed", split.seed}};
  j["train"] = json::parse(train_json);
  j["augment"] = json::parse(augment_json);
  j["data_source"] = data.manifest.source;
  return j.dump();
}

void check_scenario_length(const ModelDir& m, const ProtectionScenario& scenario) {
  if (scenario.size() != m.d_x) {
    throw ConsistencyError("scenario has " + std::to_string(scenario.size()) + " bits, model expects d_x = " +
                           std::to_string(m.d_x));
  }
}

Grid<float> predict_grid(const ModelDir& m, const ProtectionScenario& scenario) {
  check_scenario_length(m, scenario);
  const SusceptibilityMap input = encode_susceptibility(scenario, m.locations, m.index_map);
  auto out = predict_maps(m.model(), {&input}, 1);
  return std::move(out.front());
}

DepthVector predict_depths(const ModelDir& m, const ProtectionScenario& scenario) {
  return extract_depths(predict_grid(m, scenario), m.index_map);
}

}  // namespace coastal::tools
