#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coastal {

struct BlobEntry {
  std::string name;
  std::vector<int> shape;
  std::string initializer;
  std::vector<float> data;
};

/// A directory holding manifest.json plus one little-endian float32 file per
/// tensor under tensors/. `metadata_json` is an arbitrary JSON object stored
/// verbatim under the manifest's "metadata" key.
struct BlobBundle {
  std::string metadata_json = "{}";
  std::vector<BlobEntry> tensors;

  const BlobEntry& find(const std::string& name) const;
};

void write_blob_bundle(const std::filesystem::path& dir, const BlobBundle& bundle);
BlobBundle read_blob_bundle(const std::filesystem::path& dir);

/// FNV-1a 64 over the manifest and every tensor file, as 16 hex digits.
std::string bundle_fingerprint(const std::filesystem::path& dir);

}  // namespace coastal
