#include <algorithm>
#include <cmath>
#include <set>

#include "coastal/scenario.hpp"
#include "coastal/synth.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"

using namespace coastal;

TEST_SUITE("synth") {
  TEST_CASE("oracle formula") {
    const SynthOracleParams p{0.0, 2.0, 1.0, 0.3, 9};
    const auto g = make_synthetic_geometry(6, 120, 9);
    for (const auto& sc : {parse_scenario("000000"), parse_scenario("101100"), parse_scenario("111111")}) {
      const DepthVector y = synth_oracle(sc, g.locations, g.segments, p);
      REQUIRE(y.size() == 120);
      for (std::size_t k = 0; k < y.size(); ++k) {
        const auto& loc = g.locations[k];
        const int s = loc.segment_id;
        double nb = 0, count = 0;
        for (int t : {s - 1, s + 1}) {
          if (t < 0 || t >= 6) continue;
          count += 1;
          nb += sc[static_cast<std::size_t>(t)] ? 1 : 0;
        }
        const double expect = std::max(0.0, synth_base_depth(loc.id, p) - (sc[s] ? 1.0 : 0.0) + 0.3 * nb / count);
        REQUIRE(y[k] == doctest::Approx(expect).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("one protected segment only moves its own and neighboring locations") {
    const SynthOracleParams p{0.0, 2.0, 1.0, 0.3, 4};
    const auto g = make_synthetic_geometry(6, 150, 4);
    for (unsigned mask = 0; mask < 64; ++mask) {
      ProtectionScenario base = ProtectionScenario::none(6);
      for (int b = 0; b < 6; ++b) base.set(b, (mask >> b) & 1u);
      const auto y0 = synth_oracle(base, g.locations, g.segments, p);
      for (int s = 0; s < 6; ++s) {
        if (base[s]) continue;
        ProtectionScenario more = base;
        more.set(s, true);
        const auto y1 = synth_oracle(more, g.locations, g.segments, p);
        for (std::size_t k = 0; k < y0.size(); ++k) {
          if (y0[k] != y1[k]) REQUIRE(std::abs(g.locations[k].segment_id - s) <= 1);
        }
      }
    }
  }

  TEST_CASE("geometry and scenario set") {
    const auto g = make_synthetic_geometry(6, 400, 42);
    CHECK(g.segments.size() == 6);
    CHECK(g.locations.size() == 400);
    std::set<std::int64_t> ids;
    for (const auto& l : g.locations) {
      ids.insert(l.id);
      CHECK(l.segment_id == nearest_segment(l, g.segments));
      CHECK(static_cast<double>(static_cast<float>(l.lon)) == l.lon);
      CHECK(static_cast<double>(static_cast<float>(l.lat)) == l.lat);
    }
    CHECK(ids.size() == 400);
    const auto sc = synthetic_scenarios(6, 64, 42);
    CHECK(std::set<ProtectionScenario>(sc.begin(), sc.end()).size() == 64);
    const auto base = make_base_scenarios(6, true);
    CHECK(std::equal(base.begin(), base.end(), sc.begin()));
  }

  TEST_CASE("base depth is seeded per location") {
    const SynthOracleParams p{0.5, 1.5, 1.0, 0.3, 1};
    CHECK(synth_base_depth(7, p) == synth_base_depth(7, p));
    CHECK(synth_base_depth(7, p) != synth_base_depth(8, p));
    SynthOracleParams q = p;
    q.seed = 2;
    CHECK(synth_base_depth(7, p) != synth_base_depth(7, q));
    for (int id = 0; id < 100; ++id) {
      const double b = synth_base_depth(id, p);
      CHECK(b >= 0.5);
      CHECK(b <= 1.5);
    }
    SynthOracleParams bad = p;
    bad.base_min = 3.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}
