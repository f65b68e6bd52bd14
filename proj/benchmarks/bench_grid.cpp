#include <benchmark/benchmark.h>

#include "coastal/grid.hpp"
#include "coastal/grid_io.hpp"
#include "coastal/scenario.hpp"
#include "coastal/synth.hpp"

using namespace coastal;

namespace {

void BM_BuildIndexMap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SynthGeometry geo = make_synthetic_geometry(17, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(build_index_map(geo.locations, 1024, 1024));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_BuildIndexMap)->Arg(400)->Arg(12066)->Unit(benchmark::kMillisecond);

void BM_EncodeDecode(benchmark::State& state) {
  const SynthGeometry geo = make_synthetic_geometry(17, 12066, 4);
  const GridIndexMap map = build_index_map(geo.locations, 1024, 1024);
  const DepthVector depths(geo.locations.size(), 0.5f);
  for (auto _ : state) {
    const InundationMap m = encode_inundation(depths, map);
    benchmark::DoNotOptimize(extract_depths(m, map));
  }
}
BENCHMARK(BM_EncodeDecode)->Unit(benchmark::kMillisecond);

void BM_SerializeGrid(benchmark::State& state) {
  const SynthGeometry geo = make_synthetic_geometry(6, 400, 4);
  const GridIndexMap map = build_index_map(geo.locations, 128, 128);
  const InundationMap m = encode_inundation(DepthVector(400, 1.0f), map);
  for (auto _ : state) benchmark::DoNotOptimize(base64_encode(serialize_grid(m)));
}
BENCHMARK(BM_SerializeGrid)->Unit(benchmark::kMicrosecond);

void BM_Susceptibility(benchmark::State& state) {
  const SynthGeometry geo = make_synthetic_geometry(17, 12066, 4);
  const GridIndexMap map = build_index_map(geo.locations, 1024, 1024);
  const auto s = ProtectionScenario::all(17);
  for (auto _ : state) benchmark::DoNotOptimize(encode_susceptibility(s, geo.locations, map));
}
BENCHMARK(BM_Susceptibility)->Unit(benchmark::kMillisecond);

}  // namespace
