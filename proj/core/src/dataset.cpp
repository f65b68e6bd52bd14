#include "coastal/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "coastal/errors.hpp"
#include "json.hpp"

namespace coastal {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kLocationsHeader = "id,lon,lat,segment_id";
constexpr const char* kSegmentsHeader = "segment_id,vertex_idx,lon,lat";
constexpr const char* kScenariosHeader = "scenario_id,bitstring";
constexpr const char* kDepthsHeader = "location_id,peak_depth_m";

std::string fmt_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_depth(float v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Rows of a headered CSV with a fixed column count; blank lines skipped.
std::vector<std::vector<std::string>> read_csv(const fs::path& file, const std::string& header) {
  std::ifstream in(file);
  if (!in) throw LoadError("missing file " + file.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != header) {
    throw LoadError(file.string() + ": expected header '" + header + "'");
  }
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != columns) {
      throw LoadError(file.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                      " columns, found " + std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_double(const std::string& s, const fs::path& file) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw LoadError(file.string() + ": '" + s + "' is not a number");
  }
  return v;
}

long long to_int(const std::string& s, const fs::path& file) {
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw LoadError(file.string() + ": '" + s + "' is not an integer");
  }
  return v;
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  return out;
}

}  // namespace

std::string manifest_to_json(const DatasetManifest& m) {
  json j = {{"schema_version", m.schema_version},
            {"d_x", m.d_x},
            {"d_y", m.d_y},
            {"H", m.H},
            {"W", m.W},
            {"scenario_count", m.scenario_count},
            {"files", m.files},
            {"segment_ordering", m.segment_ordering},
            {"source", m.source}};
  j["provenance"] = json::parse(m.provenance_json);
  return j.dump(2);
}

DatasetManifest manifest_from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    m.schema_version = j.at("schema_version").get<int>();
    m.d_x = j.at("d_x").get<std::size_t>();
    m.d_y = j.at("d_y").get<std::size_t>();
    m.H = j.at("H").get<int>();
    m.W = j.at("W").get<int>();
    m.scenario_count = j.at("scenario_count").get<std::size_t>();
    m.files = j.value("files", std::vector<std::string>{});
    m.segment_ordering = j.value("segment_ordering", m.segment_ordering);
    m.source = j.value("source", m.source);
    if (j.contains("provenance")) m.provenance_json = j["provenance"].dump();
  } catch (const json::exception& e) {
    throw LoadError(std::string("manifest: ") + e.what());
  }
  if (m.schema_version != 1) throw LoadError("unsupported manifest schema_version " + std::to_string(m.schema_version));
  return m;
}

void write_locations_csv(const std::vector<CoastalLocation>& locations, const fs::path& file) {
  auto out = open_out(file);
  out << kLocationsHeader << '\n';
  for (const auto& l : locations) {
    out << l.id << ',' << fmt_coord(l.lon) << ',' << fmt_coord(l.lat) << ',' << l.segment_id << '\n';
  }
}

std::vector<CoastalLocation> read_locations_csv(const fs::path& file) {
  std::vector<CoastalLocation> locs;
  std::set<std::int64_t> seen;
  for (const auto& r : read_csv(file, kLocationsHeader)) {
    CoastalLocation l;
    l.id = to_int(r[0], file);
    l.lon = to_double(r[1], file);
    l.lat = to_double(r[2], file);
    l.segment_id = static_cast<int>(to_int(r[3], file));
    if (!seen.insert(l.id).second) throw LoadError(file.string() + ": duplicate location id " + std::to_string(l.id));
    locs.push_back(l);
  }
  std::sort(locs.begin(), locs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return locs;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset d;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw LoadError("missing file " + (dir / "manifest.json").string());
    std::stringstream ss;
    ss << in.rdbuf();
    d.manifest = manifest_from_json(ss.str());
  }
  const DatasetManifest& m = d.manifest;
  for (const auto& f : m.files) {
    if (!fs::exists(dir / f)) throw LoadError("manifest lists missing file " + f);
  }

  d.locations = read_locations_csv(dir / "locations.csv");
  if (d.locations.size() != m.d_y) {
    throw LoadError("locations.csv has " + std::to_string(d.locations.size()) + " rows, manifest says d_y = " +
                    std::to_string(m.d_y));
  }

  const fs::path seg_file = dir / "segments.csv";
  std::map<int, std::vector<std::pair<long long, LonLat>>> verts;
  for (const auto& r : read_csv(seg_file, kSegmentsHeader)) {
    verts[static_cast<int>(to_int(r[0], seg_file))].push_back(
        {to_int(r[1], seg_file), LonLat{to_double(r[2], seg_file), to_double(r[3], seg_file)}});
  }
  if (verts.size() != m.d_x) {
    throw LoadError("segments.csv has " + std::to_string(verts.size()) + " segments, manifest says d_x = " +
                    std::to_string(m.d_x));
  }
  int expected_id = 0;
  for (auto& [id, vs] : verts) {
    if (id != expected_id++) throw LoadError("segment ids must be 0..d_x-1");
    std::sort(vs.begin(), vs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (vs.size() < 2) throw LoadError("segment " + std::to_string(id) + " has fewer than 2 vertices");
    SegmentGeometry g;
    g.segment_id = id;
    for (const auto& v : vs) g.vertices.push_back(v.second);
    d.segments.push_back(std::move(g));
  }
  for (const auto& l : d.locations) {
    if (l.segment_id < 0 || static_cast<std::size_t>(l.segment_id) >= m.d_x) {
      throw LoadError("location " + std::to_string(l.id) + " references unknown segment " +
                      std::to_string(l.segment_id));
    }
  }

  std::map<std::int64_t, std::size_t> pos;
  for (std::size_t k = 0; k < d.locations.size(); ++k) pos[d.locations[k].id] = k;

  const fs::path sc_file = dir / "scenarios.csv";
  std::set<std::string> ids;
  for (const auto& r : read_csv(sc_file, kScenariosHeader)) {
    Sample s;
    s.scenario_id = r[0];
    if (s.scenario_id.empty() || s.scenario_id.find('/') != std::string::npos) {
      throw LoadError("invalid scenario id '" + s.scenario_id + "'");
    }
    if (!ids.insert(s.scenario_id).second) throw LoadError("duplicate scenario id " + s.scenario_id);
    try {
      s.scenario = parse_scenario(r[1]);
    } catch (const Error& e) {
      throw LoadError("scenario " + s.scenario_id + ": " + e.what());
    }
    if (s.scenario.size() != m.d_x) {
      throw LoadError("scenario " + s.scenario_id + " has " + std::to_string(s.scenario.size()) + " bits, expected " +
                      std::to_string(m.d_x));
    }
    const fs::path df = dir / "depths" / (s.scenario_id + ".csv");
    s.depths.assign(m.d_y, 0.0f);
    std::vector<bool> filled(m.d_y, false);
    for (const auto& dr : read_csv(df, kDepthsHeader)) {
      const std::int64_t lid = to_int(dr[0], df);
      auto it = pos.find(lid);
      if (it == pos.end()) throw LoadError(df.string() + ": unknown location id " + std::to_string(lid));
      if (filled[it->second]) throw LoadError(df.string() + ": duplicate location id " + std::to_string(lid));
      const double v = to_double(dr[1], df);
      if (!(v >= 0)) throw LoadError(df.string() + ": negative depth at location " + std::to_string(lid));
      s.depths[it->second] = static_cast<float>(v);
      filled[it->second] = true;
    }
    for (std::size_t k = 0; k < filled.size(); ++k) {
      if (!filled[k]) {
        throw LoadError(df.string() + ": missing location id " + std::to_string(d.locations[k].id));
      }
    }
    d.samples.push_back(std::move(s));
  }
  if (d.samples.size() != m.scenario_count) {
    throw LoadError("scenarios.csv has " + std::to_string(d.samples.size()) + " rows, manifest says " +
                    std::to_string(m.scenario_count));
  }
  return d;
}

void write_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir / "depths");
  DatasetManifest m = data.manifest;
  m.d_x = data.segments.size();
  m.d_y = data.locations.size();
  m.scenario_count = data.samples.size();
  m.files = {"locations.csv", "segments.csv", "scenarios.csv"};
  for (const auto& s : data.samples) m.files.push_back("depths/" + s.scenario_id + ".csv");

  std::vector<CoastalLocation> locs(data.locations);
  std::sort(locs.begin(), locs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  write_locations_csv(locs, dir / "locations.csv");
  {
    auto out = open_out(dir / "segments.csv");
    out << kSegmentsHeader << '\n';
    for (const auto& g : data.segments) {
      for (std::size_t k = 0; k < g.vertices.size(); ++k) {
        out << g.segment_id << ',' << k << ',' << fmt_coord(g.vertices[k].lon) << ',' << fmt_coord(g.vertices[k].lat) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "scenarios.csv");
    out << kScenariosHeader << '\n';
    for (const auto& s : data.samples) out << s.scenario_id << ',' << s.scenario.to_string() << '\n';
  }
  for (const auto& s : data.samples) {
    if (s.depths.size() != locs.size()) throw ConsistencyError("sample " + s.scenario_id + " has wrong depth count");
    auto out = open_out(dir / "depths" / (s.scenario_id + ".csv"));
    out << kDepthsHeader << '\n';
    for (std::size_t k = 0; k < locs.size(); ++k) out << locs[k].id << ',' << fmt_depth(s.depths[k]) << '\n';
  }
  auto out = open_out(dir / "manifest.json");
  out << manifest_to_json(m) << '\n';
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (spec.train + spec.val + spec.test > n) {
    throw ConfigError("split " + std::to_string(spec.train) + "/" + std::to_string(spec.val) + "/" +
                      std::to_string(spec.test) + " exceeds " + std::to_string(n) + " samples");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  for (std::size_t k = n; k > 1; --k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::swap(perm[k - 1], perm[pick(rng)]);
  }
  SplitIndices s;
  auto a = perm.begin();
  s.train.assign(a, a + static_cast<std::ptrdiff_t>(spec.train));
  a += static_cast<std::ptrdiff_t>(spec.train);
  s.val.assign(a, a + static_cast<std::ptrdiff_t>(spec.val));
  a += static_cast<std::ptrdiff_t>(spec.val);
  s.test.assign(a, a + static_cast<std::ptrdiff_t>(spec.test));
  return s;
}

DatasetSplit split_dataset(const std::vector<Sample>& samples, const SplitSpec& spec) {
  DatasetSplit out;
  out.indices = split_indices(samples.size(), spec);
  for (auto k : out.indices.train) out.train.push_back(samples[k]);
  for (auto k : out.indices.val) out.val.push_back(samples[k]);
  for (auto k : out.indices.test) out.test.push_back(samples[k]);
  return out;
}

GridIndexMap dataset_index_map(const Dataset& data) {
  return build_index_map(data.locations, data.manifest.H, data.manifest.W);
}

std::vector<TrainingPair> make_training_pairs(const std::vector<Sample>& samples,
                                              const std::vector<CoastalLocation>& locations,
                                              const GridIndexMap& index_map) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(samples.size());
  for (const auto& s : samples) {
    TrainingPair p;
    p.input = encode_susceptibility(s.scenario, locations, index_map);
    p.target = std::make_shared<const InundationMap>(encode_inundation(s.depths, index_map));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace coastal
