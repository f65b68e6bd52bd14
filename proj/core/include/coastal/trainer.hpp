#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "coastal/augment.hpp"
#include "coastal/caspian.hpp"

namespace coastal {

struct TrainConfig {
  double lr_peak = 8e-4;
  int warmup_epochs = 20;
  int main_epochs = 200;
  double plateau_factor = 0.85;
  int plateau_patience = 10;
  int early_stop_patience = 40;
  int batch_size = 2;
  double theta = 0.5;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  /// A validation loss counts as an improvement only below best - min_delta.
  double min_delta = 1e-8;

  void validate() const;
};

/// Reads keys lr_peak, warmup_epochs, main_epochs, plateau_factor,
/// plateau_patience, early_stop_patience, batch_size, theta, seed, beta1,
/// beta2, epsilon from the object itself or its "train" member.
TrainConfig train_config_from_json(std::string_view json, const TrainConfig& base = {});
std::string train_config_to_json(const TrainConfig& cfg);

/// Linear warmup to lr_peak, then lr_peak * factor^reductions.
double lr_at(int epoch, const TrainConfig& cfg, int reductions);

/// Counts consecutive non-improving observations; fires (and resets the
/// count) when it reaches `patience`.
class PlateauScheduler {
 public:
  PlateauScheduler(int patience, double factor, double min_delta = 1e-8);

  /// Returns true when this observation triggers a reduction.
  bool observe(double loss);

  int reductions() const noexcept { return reductions_; }
  double multiplier() const noexcept;
  int wait() const noexcept { return wait_; }
  double best() const noexcept { return best_; }

 private:
  int patience_;
  double factor_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  int wait_ = 0;
  int reductions_ = 0;
};

/// Adam with bias correction folded into the step size and epsilon outside
/// the square root.
template <class T>
class Adam {
 public:
  Adam(nn::ParamStore<T>& params, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-7);
  void step(double lr);
  long long iterations() const noexcept { return t_; }

 private:
  nn::ParamStore<T>* params_;
  double beta1_, beta2_, epsilon_;
  long long t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

struct TrainEvent {
  int epoch = 0;
  std::string kind;  ///< "plateau" or "early_stop"
  double value = 0.0;
};

struct TrainHistory {
  std::vector<int> epochs;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> lr;
  std::vector<TrainEvent> events;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int early_stop_epoch = -1;

  std::string to_json(int indent = 2) const;
};

struct EpochRecord {
  int epoch;
  double train_loss;
  double val_loss;
  double lr;
};

/// Batched inference on maps of the model's grid size.
std::vector<Grid<float>> predict_maps(const CaspianModel<float>& model,
                                      const std::vector<const SusceptibilityMap*>& maps,
                                      int batch_size = 2);

class Trainer {
 public:
  Trainer(CaspianModel<float>& model, TrainConfig cfg);

  /// One Adam update on `batch`; returns the batch loss before the update.
  double step(const std::vector<const TrainingPair*>& batch, double lr);

  /// Mean per-sample masked Huber loss, without recording gradients.
  double evaluate(const std::vector<TrainingPair>& pairs) const;

  /// Full schedule; the parameters with the lowest validation loss are
  /// restored before returning.
  TrainHistory fit(const std::vector<TrainingPair>& train, const std::vector<TrainingPair>& val,
                   const std::function<void(const EpochRecord&)>& on_epoch = {});

  const TrainConfig& config() const noexcept { return cfg_; }

 private:
  CaspianModel<float>* model_;
  TrainConfig cfg_;
  Adam<float> adam_;
};

TrainHistory train(CaspianModel<float>& model, const std::vector<TrainingPair>& train_pairs,
                   const std::vector<TrainingPair>& val_pairs, const TrainConfig& cfg,
                   const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace coastal
