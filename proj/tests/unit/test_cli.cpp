#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "coastal/caspian.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace coastal;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "coastal");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = coastal::tools::cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

json last_json_line(const std::string& text) {
  if (json::accept(text)) return json::parse(text);
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty() && line.front() == '{') last = line;
  return json::parse(last);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"synth"}).code == 2);
    CHECK(run({"ablate", "--variant", "delta"}).code == 2);
    CHECK(run({"baseline", "fit", "--method", "forest", "--data", "x", "--out", "y"}).code == 2);
    CHECK(run({"ablate", "--variant", "z", "--config", "/nonexistent/config.json"}).code == 2);
  }

  TEST_CASE("ablate reports the built model size") {
    const Run r = run({"ablate", "--variant", "gamma"});
    REQUIRE(r.code == 0);
    const json j = last_json_line(r.out);
    CHECK(j["parameter_count"] == 183680);
    CHECK(j["closed_form"] == 183680);

    fixtures::TempDir dir("ablate");
    std::ofstream(dir / "c.json") << R"({"model": {"H": 32, "W": 32, "F": 4, "K": 2, "C": 2, "w": 2, "M": 1}})";
    const Run small = run({"ablate", "--variant", "omega", "--config", (dir / "c.json").string()});
    REQUIRE(small.code == 0);
    ModelConfig c = fixtures::tiny_config();
    c.variant = Variant::no_pooling_path;
    CHECK(last_json_line(small.out)["parameter_count"] == closed_form_param_count(c));
  }

  TEST_CASE("predict and evaluate on a model directory") {
    const fixtures::TinyModelDir dir;
    const Run p = run({"predict", "--model", dir.model.string(), "--scenario", "1001"});
    REQUIRE(p.code == 0);
    CHECK(last_json_line(p.out)["depths"].size() == 60);
    CHECK(run({"predict", "--model", dir.model.string(), "--scenario", "100"}).code == 2);
    CHECK(run({"predict", "--model", dir.model.string(), "--scenario", "10a1"}).code == 2);
    CHECK(run({"predict", "--model", (dir.root / "missing").string(), "--scenario", "1001"}).code == 1);

    const Run grid = run({"predict", "--model", dir.model.string(), "--scenario", "1001", "--grid-out",
                          (dir.root / "g.bin").string()});
    CHECK(grid.code == 0);
    CHECK(std::filesystem::file_size(dir.root / "g.bin") > 32u * 32u * 4u);

    const Run e = run({"evaluate", "--model", dir.model.string(), "--data", dir.data.string(), "--split", "all"});
    REQUIRE(e.code == 0);
    const json m = last_json_line(e.out);
    CHECK(m.contains("amae"));
    CHECK(run({"evaluate", "--model", dir.model.string(), "--data", dir.data.string(), "--split", "dev"}).code == 2);
  }

  TEST_CASE("synth, train and baselines round trip") {
    fixtures::TempDir dir("pipeline");
    const auto data = (dir / "data").string();
    REQUIRE(run({"synth", "--out", data, "--d-x", "3", "--locations", "40", "--height", "32", "--width", "32",
                 "--scenarios", "8", "--seed", "2"})
                .code == 0);
    std::ofstream(dir / "c.json") << json{
        {"model", {{"F", 4}, {"K", 2}, {"C", 2}, {"w", 2}, {"M", 1}, {"seed", 1}}},
        {"train", {{"warmup_epochs", 1}, {"main_epochs", 1}, {"seed", 1}}},
        {"augment", {{"m", 1}, {"patch_size", 4}, {"seed", 1}}},
        {"split", {{"train", 4}, {"val", 2}, {"test", 2}, {"seed", 1}}}}.dump();
    const auto cfg = (dir / "c.json").string();
    const Run t = run({"train", "--data", data, "--config", cfg, "--out", (dir / "m").string(), "--quiet"});
    REQUIRE(t.code == 0);
    const json tj = last_json_line(t.out);
    CHECK(tj["epochs_run"] == 2);
    CHECK(std::filesystem::exists(dir / "m" / "history.json"));
    CHECK(std::filesystem::exists(dir / "m" / "locations.csv"));

    for (const char* method : {"naive", "linear", "lasso", "svr", "kriging"}) {
      CAPTURE(method);
      const auto out = (dir / method).string();
      REQUIRE(run({"baseline", "fit", "--method", method, "--data", data, "--out", out, "--config", cfg}).code == 0);
      const Run p = run({"baseline", "predict", "--model", out, "--scenario", "011"});
      REQUIRE(p.code == 0);
      for (const auto& v : last_json_line(p.out)["depths"]) CHECK(v.get<double>() >= 0.0);
      CHECK(run({"baseline", "predict", "--model", out, "--scenario", "0110"}).code == 2);
      const Run e = run({"baseline", "evaluate", "--model", out, "--data", data, "--split", "test"});
      REQUIRE(e.code == 0);
      CHECK(last_json_line(e.out).contains("amae"));
    }
  }
}
