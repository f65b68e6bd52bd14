#include <algorithm>
#include <set>

#include "coastal/dataset.hpp"
#include "coastal/synth.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace coastal;

TEST_SUITE("dataset") {
  TEST_CASE("split sizes, disjointness and determinism") {
    const auto s = split_indices(142, SplitSpec{112, 12, 18, 4});
    CHECK(s.train.size() == 112);
    CHECK(s.val.size() == 12);
    CHECK(s.test.size() == 18);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 142);
    const auto again = split_indices(142, SplitSpec{112, 12, 18, 4});
    CHECK(again.test == s.test);
    CHECK(split_indices(142, SplitSpec{112, 12, 18, 5}).test != s.test);
    CHECK_THROWS_AS(split_indices(100, SplitSpec{}), ConfigError);
  }

  TEST_CASE("write and load round trip") {
    fixtures::TempDir dir("ds");
    const Dataset d = make_synthetic_dataset(4, 50, 32, 32, 10, SynthOracleParams{0.0, 2.0, 1.0, 0.3, 2});
    write_dataset(d, dir.path());
    const Dataset back = load_dataset(dir.path());
    CHECK(back.manifest.d_x == 4);
    CHECK(back.manifest.d_y == 50);
    CHECK(back.manifest.scenario_count == 10);
    REQUIRE(back.samples.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
      CHECK(back.samples[k].scenario == d.samples[k].scenario);
      CHECK(back.samples[k].depths == d.samples[k].depths);
      CHECK(back.samples[k].scenario_id == d.samples[k].scenario_id);
    }
    REQUIRE(back.locations.size() == d.locations.size());
    for (std::size_t k = 0; k < d.locations.size(); ++k) {
      CHECK(back.locations[k].lon == d.locations[k].lon);
      CHECK(back.locations[k].lat == d.locations[k].lat);
    }
    CHECK(std::is_sorted(back.locations.begin(), back.locations.end(),
                         [](const auto& a, const auto& b) { return a.id < b.id; }));
    const DatasetManifest m = manifest_from_json(manifest_to_json(back.manifest));
    CHECK(m.files == back.manifest.files);
  }

  TEST_CASE("missing depth file names the scenario") {
    fixtures::TempDir dir("ds_missing");
    const Dataset d = make_synthetic_dataset(3, 20, 16, 16, 4, SynthOracleParams{});
    write_dataset(d, dir.path());
    std::filesystem::remove(dir.path() / "depths" / "s0002.csv");
    try {
      load_dataset(dir.path());
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("s0002") != std::string::npos);
    }
    CHECK_THROWS_AS(load_dataset(dir / "absent"), LoadError);
  }

  TEST_CASE("training pairs carry masks at every location") {
    const Dataset d = make_synthetic_dataset(3, 30, 16, 16, 3, SynthOracleParams{});
    const auto map = dataset_index_map(d);
    const auto pairs = make_training_pairs(d.samples, d.locations, map);
    REQUIRE(pairs.size() == 3);
    std::size_t masked = 0;
    for (auto b : pairs[0].target->mask.cells()) masked += b;
    CHECK(masked == 30);
    CHECK(extract_depths(*pairs[1].target, map) == d.samples[1].depths);
  }
}
