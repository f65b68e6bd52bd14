#include <memory>

#include "coastal/augment.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"

using namespace coastal;

namespace {

int zeros(const SusceptibilityMap& m) {
  int n = 0;
  for (auto v : m.cells()) n += v == 0;
  return n;
}

}  // namespace

TEST_SUITE("augment") {
  TEST_CASE("patch geometry") {
    SusceptibilityMap a(10, 10, 1);
    zero_patch(a, {5, 5}, 4);
    CHECK(zeros(a) == 16);
    CHECK(a(3, 3) == 0);
    CHECK(a(6, 6) == 0);
    CHECK(a(7, 7) == 1);
    SusceptibilityMap b(10, 10, 1);
    zero_patch(b, {0, 0}, 4);
    CHECK(zeros(b) == 4);
    SusceptibilityMap c(10, 10, 1);
    zero_patch(c, {9, 9}, 5);  // [7, 12) clipped to [7, 10)
    CHECK(zeros(c) == 9);
  }

  TEST_CASE("cutout is deterministic per stream and only zeroes cells") {
    SusceptibilityMap m(20, 20, -1);
    m(4, 4) = 1;
    CutoutConfig cfg;
    cfg.n_patches = 2;
    cfg.patch_size = 5;
    auto r1 = cutout_stream(3, 0, 1), r2 = cutout_stream(3, 0, 1), r3 = cutout_stream(3, 0, 2);
    const auto a = cutout(m, cfg, r1), b = cutout(m, cfg, r2), c = cutout(m, cfg, r3);
    CHECK(a == b);
    CHECK(a != c);
    int changed = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (a.cells()[k] != m.cells()[k]) {
        ++changed;
        CHECK(a.cells()[k] == 0);
      }
    }
    CHECK(changed > 0);
    CHECK(changed <= 50);
  }

  TEST_CASE("dataset expansion keeps originals first and shares targets") {
    std::vector<TrainingPair> pairs;
    for (int k = 0; k < 3; ++k) {
      InundationMap t{Grid<float>(16, 16, static_cast<float>(k)), Grid<std::uint8_t>(16, 16, 1)};
      pairs.push_back({SusceptibilityMap(16, 16, 1), std::make_shared<const InundationMap>(t)});
    }
    CutoutConfig cfg;
    cfg.m = 4;
    cfg.patch_size = 3;
    cfg.seed = 1;
    const auto out = augment_dataset(pairs, cfg);
    REQUIRE(out.size() == 15);
    for (std::size_t k = 0; k < out.size(); ++k) {
      CHECK(out[k].target.get() == pairs[k / 5].target.get());
      if (k % 5 == 0) CHECK(out[k].input == pairs[k / 5].input);
    }
    CHECK(augment_dataset(pairs, cfg)[7].input == out[7].input);
  }

  TEST_CASE("config validation") {
    CutoutConfig c;
    CHECK_NOTHROW(c.validate(1024, 1024));
    CHECK_THROWS_AS(c.validate(32, 32), ConfigError);
    c.patch_size = 0;
    CHECK_THROWS_AS(c.validate(128, 128), ConfigError);
    c = CutoutConfig{};
    c.m = -1;
    CHECK_THROWS_AS(c.validate(1024, 1024), ConfigError);
  }
}
