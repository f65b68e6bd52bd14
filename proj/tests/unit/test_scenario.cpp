#include <set>

#include "coastal/scenario.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"

using namespace coastal;

TEST_SUITE("scenario") {
  TEST_CASE("parse and print") {
    const auto s = parse_scenario("00110011001100110");
    CHECK(s.size() == 17);
    CHECK(s.protected_count() == 8);
    CHECK(s[2]);
    CHECK_FALSE(s[0]);
    CHECK(s.to_string() == "00110011001100110");
    CHECK_THROWS_AS(parse_scenario("0120"), ParseError);
    CHECK_THROWS_AS(parse_scenario(""), ParseError);
  }

  TEST_CASE("base scenarios") {
    const auto b = make_base_scenarios(17);
    REQUIRE(b.size() == 38);
    const std::set<ProtectionScenario> s(b.begin(), b.end());
    CHECK(s.count(parse_scenario("11111111111111111")));
    CHECK(s.count(parse_scenario("00000000000000000")));
    CHECK(make_base_scenarios(3).size() == 10);
    // For d_x = 2 the halves coincide with the unit vectors.
    const auto d2 = make_base_scenarios(2, true);
    CHECK(std::set<ProtectionScenario>(d2.begin(), d2.end()).size() == d2.size());
    CHECK(d2.size() == 4);
  }

  TEST_CASE("holdout set") {
    const auto h = holdout_scenarios();
    REQUIRE(h.size() == 32);
    CHECK(h.front().to_string() == "00110011001100110");
    CHECK(h.back().to_string() == "00011111111111000");
    CHECK(std::set<ProtectionScenario>(h.begin(), h.end()).size() == 32);
  }

  TEST_CASE("random scenarios are distinct, seeded and respect exclusions") {
    const auto base = make_base_scenarios(6, true);
    const std::set<ProtectionScenario> excl(base.begin(), base.end());
    const auto a = random_scenarios(40, 6, 9, excl);
    CHECK(a == random_scenarios(40, 6, 9, excl));
    CHECK(a != random_scenarios(40, 6, 10, excl));
    const std::set<ProtectionScenario> uniq(a.begin(), a.end());
    CHECK(uniq.size() == 40);
    for (const auto& s : a) CHECK_FALSE(excl.count(s));
    CHECK(random_scenarios(64 - excl.size(), 6, 1, excl).size() == 64 - excl.size());
    CHECK_THROWS_AS(random_scenarios(65 - excl.size(), 6, 1, excl), CapacityError);
  }
}
