#include <benchmark/benchmark.h>

#include "coastal/caspian.hpp"
#include "coastal/dataset.hpp"
#include "coastal/scenario.hpp"
#include "coastal/synth.hpp"
#include "coastal/trainer.hpp"

using namespace coastal;

namespace {

// Inference on one scenario through the public prediction path.
void BM_Predict(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  ModelConfig cfg = hw == 1024 ? ModelConfig::paper() : ModelConfig::desk();
  cfg.H = cfg.W = hw;
  const CaspianModel<float> model(cfg);
  const std::size_t d_x = hw == 1024 ? 17 : 6;
  const SynthGeometry geo = make_synthetic_geometry(d_x, hw == 1024 ? 12066 : 400, 4);
  const GridIndexMap map = build_index_map(geo.locations, hw, hw);
  const SusceptibilityMap input = encode_susceptibility(ProtectionScenario::all(d_x), geo.locations, map);
  const std::vector<const SusceptibilityMap*> maps{&input};
  for (auto _ : state) benchmark::DoNotOptimize(predict_maps(model, maps, 1));
}
BENCHMARK(BM_Predict)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Predict)->Arg(1024)->Unit(benchmark::kSecond)->Iterations(2);

void BM_DeskTrainStep(benchmark::State& state) {
  const ModelConfig cfg = ModelConfig::desk();
  CaspianModel<float> model(cfg);
  const Dataset data = make_synthetic_dataset(6, 400, cfg.H, cfg.W, 8, SynthOracleParams{});
  const auto pairs = make_training_pairs(data.samples, data.locations, dataset_index_map(data));
  Trainer trainer(model, TrainConfig{});
  const std::vector<const TrainingPair*> batch{&pairs[0]};
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch, 1e-4));
}
BENCHMARK(BM_DeskTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
