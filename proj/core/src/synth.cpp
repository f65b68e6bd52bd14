#include "coastal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "coastal/errors.hpp"
#include "json.hpp"

namespace coastal {

void SynthOracleParams::validate() const {
  if (!(base_max >= base_min)) throw ConfigError("base depth range is empty");
  if (alpha < 0 || beta < 0) throw ConfigError("alpha and beta must be >= 0");
}

double synth_base_depth(std::int64_t location_id, const SynthOracleParams& params) {
  const auto id = static_cast<std::uint64_t>(location_id);
  std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(params.base_min, params.base_max);
  return params.base_max > params.base_min ? dist(rng) : params.base_min;
}

double protected_neighbor_fraction(const ProtectionScenario& scenario, int segment) {
  const int d = static_cast<int>(scenario.size());
  if (segment < 0 || segment >= d) throw ConsistencyError("segment index outside the scenario");
  int neighbors = 0, on = 0;
  for (int s : {segment - 1, segment + 1}) {
    if (s < 0 || s >= d) continue;
    ++neighbors;
    if (scenario[static_cast<std::size_t>(s)]) ++on;
  }
  return neighbors == 0 ? 0.0 : static_cast<double>(on) / neighbors;
}

DepthVector synth_oracle(const ProtectionScenario& scenario, const std::vector<CoastalLocation>& locations,
                         const std::vector<SegmentGeometry>& segments, const SynthOracleParams& params) {
  params.validate();
  if (segments.size() != scenario.size()) throw ConsistencyError("scenario length differs from segment count");
  std::vector<CoastalLocation> sorted(locations);
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  DepthVector out;
  out.reserve(sorted.size());
  for (const auto& loc : sorted) {
    const int s = nearest_segment(loc, segments);
    const double p = scenario[static_cast<std::size_t>(s)] ? 1.0 : 0.0;
    const double v = synth_base_depth(loc.id, params) - params.alpha * p +
                     params.beta * protected_neighbor_fraction(scenario, s);
    out.push_back(static_cast<float>(std::max(0.0, v)));
  }
  return out;
}

namespace {

LonLat coast_point(double t) {
  // t in [0, 1] along the shoreline.
  const double lon = 54.0 + 0.6 * t;
  const double lat = 24.4 + 0.05 * std::sin(2.0 * std::numbers::pi * 1.5 * t) + 0.02 * std::sin(2.0 * std::numbers::pi * 4.0 * t);
  return {lon, lat};
}

// GCC 11 at -O3 drops paired double -> float -> double round trips when it
// SLP-vectorizes them; the volatile store keeps the rounding.
double as_float(double v) {
  volatile float f = static_cast<float>(v);
  return f;
}

}  // namespace

SynthGeometry make_synthetic_geometry(std::size_t d_x, std::size_t n_locations, std::uint64_t seed) {
  if (d_x < 1) throw ConfigError("d_x must be >= 1");
  if (n_locations < 1) throw ConfigError("n_locations must be >= 1");
  SynthGeometry g;
  constexpr int kVerticesPerSegment = 16;
  for (std::size_t s = 0; s < d_x; ++s) {
    SegmentGeometry seg;
    seg.segment_id = static_cast<int>(s);
    for (int v = 0; v <= kVerticesPerSegment; ++v) {
      const double t = (static_cast<double>(s) + static_cast<double>(v) / kVerticesPerSegment) / static_cast<double>(d_x);
      const LonLat p = coast_point(t);
      seg.vertices.push_back({as_float(p.lon), as_float(p.lat)});
    }
    g.segments.push_back(std::move(seg));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> along(0.0, 1.0);
  std::uniform_real_distribution<double> inland(0.004, 0.06);
  for (std::size_t k = 0; k < n_locations; ++k) {
    const double t = along(rng);
    const LonLat p = coast_point(t);
    const LonLat q = coast_point(std::min(1.0, t + 1e-4));
    const LonLat r = coast_point(std::max(0.0, t - 1e-4));
    double tx = q.lon - r.lon, ty = q.lat - r.lat;
    const double norm = std::hypot(tx, ty);
    tx /= norm;
    ty /= norm;
    // Left normal of an eastward shoreline points north: inland.
    const double off = inland(rng);
    CoastalLocation loc;
    loc.id = static_cast<std::int64_t>(k + 1);
    loc.lon = as_float(p.lon - ty * off);
    loc.lat = as_float(p.lat + tx * off);
    loc.segment_id = nearest_segment(loc, g.segments);
    g.locations.push_back(loc);
  }
  return g;
}

std::vector<ProtectionScenario> synthetic_scenarios(std::size_t d_x, std::size_t n_scenarios, std::uint64_t seed) {
  std::vector<ProtectionScenario> base = make_base_scenarios(d_x, true);
  if (base.size() >= n_scenarios) {
    base.resize(n_scenarios);
    return base;
  }
  const std::set<ProtectionScenario> exclude(base.begin(), base.end());
  auto extra = random_scenarios(n_scenarios - base.size(), d_x, seed, exclude);
  base.insert(base.end(), extra.begin(), extra.end());
  return base;
}

Dataset make_synthetic_dataset(std::size_t d_x, std::size_t n_locations, int H, int W, std::size_t n_scenarios,
                               const SynthOracleParams& params) {
  params.validate();
  if (d_x < 63 && n_scenarios > (std::size_t{1} << d_x)) {
    throw CapacityError("cannot draw " + std::to_string(n_scenarios) + " scenarios from 2^" + std::to_string(d_x));
  }
  if (static_cast<std::size_t>(H) * static_cast<std::size_t>(W) < n_locations) {
    throw CapacityError("grid has fewer cells than locations");
  }
  Dataset d;
  SynthGeometry g = make_synthetic_geometry(d_x, n_locations, params.seed);
  d.locations = std::move(g.locations);
  d.segments = std::move(g.segments);
  const auto scenarios = synthetic_scenarios(d_x, n_scenarios, params.seed);
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    Sample s;
    char id[32];
    std::snprintf(id, sizeof id, "s%04zu", k);
    s.scenario_id = id;
    s.scenario = scenarios[k];
    s.depths = synth_oracle(s.scenario, d.locations, d.segments, params);
    d.samples.push_back(std::move(s));
  }
  DatasetManifest& m = d.manifest;
  m.d_x = d_x;
  m.d_y = d.locations.size();
  m.H = H;
  m.W = W;
  m.scenario_count = d.samples.size();
  m.source = "synthetic";
  m.provenance_json = nlohmann::json{{"oracle", "shield-spillover"},
                                     {"base_min", params.base_min},
                                     {"base_max", params.base_max},
                                     {"alpha", params.alpha},
                                     {"beta", params.beta},
                                     {"seed", params.seed}}
                          .dump();
  return d;
}

DatasetManifest generate_synthetic_dataset(std::size_t d_x, std::size_t n_locations, int H, int W,
                                           std::size_t n_scenarios, const SynthOracleParams& params,
                                           const std::filesystem::path& out_dir) {
  Dataset d = make_synthetic_dataset(d_x, n_locations, H, W, n_scenarios, params);
  // Fails early if the locations cannot be placed on the grid.
  (void)dataset_index_map(d);
  write_dataset(d, out_dir);
  return load_dataset(out_dir).manifest;
}

}  // namespace coastal
