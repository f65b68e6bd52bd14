#include "coastal/blob_store.hpp"

#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "coastal/errors.hpp"
#include "json.hpp"

namespace coastal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "float32 blobs are little-endian");

std::vector<char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string blob_file(std::size_t index, const std::string& name) {
  std::string safe;
  for (char c : name) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') ? c : '_';
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%04zu_", index);
  return std::string("tensors/") + prefix + safe + ".f32";
}

}  // namespace

const BlobEntry& BlobBundle::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw LoadError("bundle has no tensor named '" + name + "'");
}

void write_blob_bundle(const fs::path& dir, const BlobBundle& bundle) {
  fs::create_directories(dir / "tensors");
  json manifest;
  manifest["format"] = "coastal-blobs";
  manifest["version"] = 1;
  manifest["byte_order"] = "little";
  manifest["metadata"] = json::parse(bundle.metadata_json);
  manifest["tensors"] = json::array();
  for (std::size_t k = 0; k < bundle.tensors.size(); ++k) {
    const auto& t = bundle.tensors[k];
    std::size_t expected = 1;
    for (int d : t.shape) expected *= static_cast<std::size_t>(d);
    if (expected != t.data.size()) {
      throw ConsistencyError("tensor '" + t.name + "' shape does not match its data length");
    }
    const std::string file = blob_file(k, t.name);
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw LoadError("cannot write " + (dir / file).string());
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    manifest["tensors"].push_back({{"name", t.name},
                                   {"shape", t.shape},
                                   {"initializer", t.initializer},
                                   {"dtype", "float32"},
                                   {"file", file}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw LoadError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

BlobBundle read_blob_bundle(const fs::path& dir) {
  const auto text = slurp(dir / "manifest.json");
  json manifest;
  try {
    manifest = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw LoadError("malformed manifest in " + dir.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "coastal-blobs") {
    throw LoadError(dir.string() + " is not a tensor bundle");
  }
  BlobBundle bundle;
  bundle.metadata_json = manifest.value("metadata", json::object()).dump();
  for (const auto& entry : manifest.at("tensors")) {
    BlobEntry t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<std::vector<int>>();
    t.initializer = entry.value("initializer", "");
    std::size_t expected = 1;
    for (int d : t.shape) expected *= static_cast<std::size_t>(d);
    const auto bytes = slurp(dir / entry.at("file").get<std::string>());
    if (bytes.size() != expected * sizeof(float)) {
      throw LoadError("tensor '" + t.name + "' blob has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected * sizeof(float)));
    }
    t.data.resize(expected);
    std::memcpy(t.data.data(), bytes.data(), bytes.size());
    bundle.tensors.push_back(std::move(t));
  }
  return bundle;
}

std::string bundle_fingerprint(const fs::path& dir) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::vector<char>& bytes) {
    for (char c : bytes) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
  };
  const auto manifest_bytes = slurp(dir / "manifest.json");
  mix(manifest_bytes);
  const json manifest = json::parse(manifest_bytes.begin(), manifest_bytes.end());
  for (const auto& entry : manifest.at("tensors")) mix(slurp(dir / entry.at("file").get<std::string>()));
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace coastal
