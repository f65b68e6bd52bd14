#include <cmath>
#include <random>

#include "coastal/huber.hpp"
#include "coastal/metrics.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace coastal;

TEST_SUITE("metrics") {
  TEST_CASE("worked example") {
    const auto r = compute_metrics({{2.5f, 0.0f, 1.0f}}, {{2.0f, 0.0f, 1.0f}});
    CHECK(r.amae.mean == doctest::Approx(0.16667).epsilon(1e-4));
    CHECK(r.armse.mean == doctest::Approx(0.28868).epsilon(1e-4));
    CHECK(r.artae.mean == doctest::Approx(0.16667).epsilon(1e-4));
    CHECK(r.delta_gt(0.1) == doctest::Approx(1.0 / 3.0));
    CHECK(r.delta_gt(0.5) == 0.0);
    CHECK(r.r2.mean == doctest::Approx(0.875));
    CHECK(r.acc0.mean == 1.0);
    CHECK(r.n_samples == 1);
  }

  TEST_CASE("perfect predictions") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(0.0f, 2.0f);
    std::vector<DepthVector> y(4, DepthVector(10));
    for (auto& v : y)
      for (auto& d : v) d = u(rng);
    y[0][0] = 0.0f;
    const auto r = compute_metrics(y, y);
    CHECK(r.amae.mean == 0.0);
    CHECK(r.armse.mean == 0.0);
    CHECK(r.r2.mean == 1.0);
    CHECK(r.acc0.mean == 1.0);
    CHECK(r.amae.std == 0.0);
  }

  TEST_CASE("dry accuracy depends on predictions, the literal form does not") {
    const std::vector<DepthVector> y{{0.0f, 0.0f, 1.0f, 2.0f}};
    const auto a = compute_metrics({{0.0f, 0.3f, 1.0f, 2.0f}}, y);
    const auto b = compute_metrics({{0.5f, 0.3f, 1.0f, 2.0f}}, y);
    CHECK(a.acc0.mean == 0.5);
    CHECK(b.acc0.mean == 0.0);
    CHECK(a.acc0_literal.mean == 0.5);
    CHECK(b.acc0_literal.mean == 0.5);
  }

  TEST_CASE("bounded fractions") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<float> u(0.0f, 3.0f);
    for (int t = 0; t < 30; ++t) {
      std::vector<DepthVector> p(3, DepthVector(12)), y(3, DepthVector(12));
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 12; ++i) {
          p[k][i] = u(rng);
          y[k][i] = i % 4 == 0 ? 0.0f : u(rng);
        }
      const auto r = compute_metrics(p, y);
      CHECK(r.amae.mean >= 0);
      CHECK(r.armse.mean >= r.amae.mean - 1e-12);
      for (double d : {0.5, 0.1}) {
        CHECK(r.delta_gt(d) >= 0);
        CHECK(r.delta_gt(d) <= 1);
      }
      CHECK(r.acc0.mean <= 1);
      CHECK(r.delta_gt(0.1) >= r.delta_gt(0.5));
    }
  }

  TEST_CASE("undefined terms are skipped with a warning") {
    const auto r = compute_metrics({{0.1f, 0.2f}, {1.0f, 2.0f}}, {{0.0f, 0.0f}, {1.0f, 3.0f}});
    CHECK(r.warnings.size() >= 2);  // ARTAE and R2 undefined for the all-zero target
    CHECK(r.artae.count == 1);
    CHECK(r.artae.mean == doctest::Approx(1.0 / 4.0));
  }

  TEST_CASE("shape errors") {
    CHECK_THROWS_AS(compute_metrics({{1.0f}}, {{1.0f, 2.0f}}), ConsistencyError);
    CHECK_THROWS_AS(compute_metrics({{1.0f}}, {{1.0f}, {2.0f}}), ConsistencyError);
    CHECK_THROWS(compute_metrics({}, {}));
  }

  TEST_CASE("json keys") {
    const auto j = nlohmann::json::parse(metrics_to_json(compute_metrics({{1.0f, 0.0f}}, {{1.0f, 0.5f}})));
    for (const char* key : {"amae", "armse", "artae", "delta_gt_0_5", "delta_gt_0_1", "r2", "acc0", "acc0_literal",
                            "n_samples", "std", "warnings"}) {
      CHECK_MESSAGE(j.contains(key), key);
    }
    CHECK(delta_key(0.5) == "delta_gt_0_5");
  }

  TEST_CASE("huber values, slope and continuity") {
    CHECK(huber(0.0, 0.5) == 0.0);
    CHECK(huber(0.5, 0.5) == 0.125);
    CHECK(huber(2.0, 0.5) == 0.875);
    CHECK(huber(-2.0, 0.5) == 0.875);
    CHECK(std::fabs(huber(0.5 + 1e-12, 0.5) - huber(0.5 - 1e-12, 0.5)) < 1e-9);
    CHECK(huber_derivative(2.0, 0.5) == 0.5);
    CHECK(huber_derivative(-0.2, 0.5) == doctest::Approx(-0.2));
  }

  TEST_CASE("masked huber loss ignores unmasked cells") {
    InundationMap p{Grid<float>(2, 2), Grid<std::uint8_t>(2, 2)};
    InundationMap t = p;
    t.mask(0, 0) = p.mask(0, 0) = 1;
    p.depth(0, 0) = 2.0f;
    CHECK(huber_loss(p, t, {0.5}) == 0.875);
    p.depth(1, 1) = 50.0f;
    CHECK(huber_loss(p, t, {0.5}) == 0.875);
    InundationMap other = t;
    other.mask(1, 0) = 1;
    CHECK_THROWS_AS(huber_loss(p, other, {0.5}), ConsistencyError);
    InundationMap empty{Grid<float>(2, 2), Grid<std::uint8_t>(2, 2)};
    CHECK_THROWS_AS(huber_loss(empty, empty, {0.5}), ConsistencyError);
  }
}
