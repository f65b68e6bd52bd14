#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "coastal/nn/ops.hpp"
#include "coastal/synth.hpp"
#include "coastal/trainer.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"

using namespace coastal;
using namespace coastal::nn;

namespace {

std::vector<TrainingPair> tiny_pairs(std::size_t n, std::uint64_t seed) {
  const Dataset d = make_synthetic_dataset(4, 60, 32, 32, n, SynthOracleParams{0.0, 2.0, 1.0, 0.3, seed});
  return make_training_pairs(d.samples, d.locations, dataset_index_map(d));
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("learning-rate schedule") {
    TrainConfig c;
    CHECK(lr_at(0, c, 0) == doctest::Approx(4e-5));
    CHECK(lr_at(19, c, 0) == doctest::Approx(8e-4));
    CHECK(lr_at(20, c, 0) == doctest::Approx(8e-4));
    CHECK(lr_at(40, c, 2) == doctest::Approx(5.78e-4));
    CHECK_THROWS_AS(lr_at(-1, c, 0), ConfigError);
  }

  TEST_CASE("plateau counter") {
    PlateauScheduler s(10, 0.85);
    int first = -1;
    for (int epoch = 1; epoch <= 25 && first < 0; ++epoch) {
      if (s.observe(1.0)) first = epoch;
    }
    CHECK(first == 11);
    CHECK(s.reductions() == 1);
    CHECK(s.wait() == 0);
    CHECK(s.multiplier() == doctest::Approx(0.85));
    // An improvement resets the count.
    for (int k = 0; k < 9; ++k) s.observe(1.0);
    CHECK_FALSE(s.observe(0.5));
    CHECK(s.wait() == 0);
    CHECK(s.best() == 0.5);
    // Changes inside min_delta are not improvements.
    CHECK_FALSE(s.observe(0.5 - 1e-10));
    CHECK(s.wait() == 1);
  }

  TEST_CASE("adam matches a hand-written update") {
    std::mt19937_64 rng(5);
    ParamStore<double> store;
    auto w = store.add("w", {1, 1, 1, 3}, Initializer::glorot_normal, rng);
    Adam<double> adam(store, 0.9, 0.999, 1e-7);
    std::vector<double> ref(w.value().values().begin(), w.value().values().end());
    std::vector<double> m(3, 0.0), v(3, 0.0);
    const double lr = 1e-2;
    for (int t = 1; t <= 4; ++t) {
      // Gradient of sum(w * c) is c; vary c per step.
      Tensor<double> c({1, 1, 1, 3});
      for (int i = 0; i < 3; ++i) c[i] = (i + 1) * std::cos(t * 0.7 + i);
      store.zero_grad();
      backward(weighted_sum(w, c));
      adam.step(lr);
      for (int i = 0; i < 3; ++i) {
        m[i] = 0.9 * m[i] + 0.1 * c[i];
        v[i] = 0.999 * v[i] + 0.001 * c[i] * c[i];
        const double lr_t = lr * std::sqrt(1 - std::pow(0.999, t)) / (1 - std::pow(0.9, t));
        ref[i] -= lr_t * m[i] / (std::sqrt(v[i]) + 1e-7);
      }
    }
    for (int i = 0; i < 3; ++i) CHECK(w.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    CHECK(adam.iterations() == 4);
  }

  TEST_CASE("a step reduces the batch loss") {
    const auto pairs = tiny_pairs(2, 1);
    CaspianModel<float> m(fixtures::tiny_config());
    auto& bias = m.params().entries().back().var.mutable_value();
    for (auto& x : bias.values()) x = 0.5f;
    Trainer t(m, TrainConfig{});
    const std::vector<const TrainingPair*> batch{&pairs[0], &pairs[1]};
    const double before = t.evaluate(pairs);
    for (int k = 0; k < 5; ++k) t.step(batch, 1e-3);
    CHECK(t.evaluate(pairs) < before);
  }

  TEST_CASE("fit restores the best epoch and records history") {
    const auto pairs = tiny_pairs(6, 2);
    const std::vector<TrainingPair> train_set(pairs.begin(), pairs.begin() + 4), val(pairs.begin() + 4, pairs.end());
    CaspianModel<float> m(fixtures::tiny_config());
    TrainConfig c;
    c.warmup_epochs = 2;
    c.main_epochs = 4;
    c.lr_peak = 5e-3;
    int calls = 0;
    const TrainHistory h = train(m, train_set, val, c, [&](const EpochRecord&) { ++calls; });
    CHECK(calls == 6);
    REQUIRE(h.epochs.size() == 6);
    CHECK(h.lr[0] == doctest::Approx(2.5e-3));
    REQUIRE(h.best_epoch >= 0);
    CHECK(h.best_val_loss == *std::min_element(h.val_loss.begin(), h.val_loss.end()));
    Trainer probe(m, c);
    CHECK(probe.evaluate(val) == doctest::Approx(h.best_val_loss).epsilon(1e-6));
    const auto j = nlohmann::json::parse(h.to_json());
    CHECK(j.contains("val_loss"));
  }

  TEST_CASE("non-finite loss stops training with the epoch named") {
    auto pairs = tiny_pairs(3, 3);
    auto bad = std::make_shared<InundationMap>(*pairs[0].target);
    for (std::size_t k = 0; k < bad->mask.size(); ++k) {
      if (bad->mask.cells()[k]) bad->depth.cells()[k] = std::numeric_limits<float>::quiet_NaN();
    }
    pairs[0].target = bad;
    CaspianModel<float> m(fixtures::tiny_config());
    TrainConfig c;
    c.warmup_epochs = 1;
    c.main_epochs = 1;
    const std::vector<TrainingPair> train_set(pairs.begin(), pairs.begin() + 2), val(pairs.begin() + 2, pairs.end());
    CHECK_THROWS_AS(train(m, train_set, val, c), NumericError);
    try {
      train(m, train_set, val, c);
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
  }

  TEST_CASE("config parsing and validation") {
    const TrainConfig c = train_config_from_json(R"({"train": {"lr_peak": 1e-3, "batch_size": 4}})");
    CHECK(c.lr_peak == 1e-3);
    CHECK(c.batch_size == 4);
    CHECK(c.warmup_epochs == 20);
    const TrainConfig back = train_config_from_json(train_config_to_json(c));
    CHECK(back.batch_size == 4);
    TrainConfig bad;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TrainConfig{};
    bad.plateau_factor = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}
