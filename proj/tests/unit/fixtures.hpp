#pragma once

#include <filesystem>
#include <string>
#include <unistd.h>

#include "coastal/caspian.hpp"
#include "coastal/dataset.hpp"
#include "coastal/synth.hpp"
#include "model_dir.hpp"

namespace fixtures {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("coastal_unit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline coastal::ModelConfig tiny_config(int hw = 32) {
  coastal::ModelConfig c;
  c.H = c.W = hw;
  c.F = 4;
  c.K = 2;
  c.C = 2;
  c.w = 2;
  c.M = 1;
  c.seed = 3;
  return c;
}

/// Synthetic dataset plus an untrained tiny checkpoint written as a model directory.
struct TinyModelDir {
  TempDir root{"model"};
  fs::path data = root / "data";
  fs::path model = root / "model";

  TinyModelDir() {
    coastal::generate_synthetic_dataset(4, 60, 32, 32, 12, coastal::SynthOracleParams{0.0, 2.0, 1.0, 0.3, 5}, data);
    const coastal::Dataset ds = coastal::load_dataset(data);
    coastal::CaspianModel<float> m(tiny_config());
    // Positive head bias so fresh predictions are not all clamped to zero.
    auto& bias = m.params().entries().back().var.mutable_value();
    for (auto& v : bias.values()) v = 0.7f;
    coastal::save_checkpoint(m, model,
                             coastal::tools::model_dir_metadata(ds, coastal::SplitSpec{8, 2, 2, 1}, "{}", "{}"));
    coastal::write_locations_csv(ds.locations, model / "locations.csv");
  }
};

}  // namespace fixtures
