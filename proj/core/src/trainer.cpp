#include "coastal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "coastal/metrics.hpp"
#include "json.hpp"

namespace coastal {

using json = nlohmann::json;
using nn::Shape;
using nn::Tensor;
using nn::Var;

void TrainConfig::validate() const {
  if (!(lr_peak > 0)) throw ConfigError("lr_peak must be > 0");
  if (warmup_epochs < 0 || main_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (warmup_epochs + main_epochs < 1) throw ConfigError("at least one epoch is required");
  if (!(plateau_factor > 0 && plateau_factor < 1)) throw ConfigError("plateau_factor must lie in (0, 1)");
  if (plateau_patience < 1 || early_stop_patience < 1) throw ConfigError("patience values must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (theta < 0) throw ConfigError("theta must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0)) throw ConfigError("Adam epsilon must be > 0");
}

TrainConfig train_config_from_json(std::string_view text, const TrainConfig& base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  if (doc.is_object() && doc.contains("train")) doc = doc["train"];
  if (!doc.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig cfg = base;
  try {
    auto num = [&](const char* key, double& dst) {
      if (doc.contains(key)) dst = doc.at(key).get<double>();
    };
    auto integer = [&](const char* key, int& dst) {
      if (doc.contains(key)) dst = doc.at(key).get<int>();
    };
    num("lr_peak", cfg.lr_peak);
    integer("warmup_epochs", cfg.warmup_epochs);
    integer("main_epochs", cfg.main_epochs);
    num("plateau_factor", cfg.plateau_factor);
    integer("plateau_patience", cfg.plateau_patience);
    integer("early_stop_patience", cfg.early_stop_patience);
    integer("batch_size", cfg.batch_size);
    num("theta", cfg.theta);
    num("beta1", cfg.beta1);
    num("beta2", cfg.beta2);
    num("epsilon", cfg.epsilon);
    num("min_delta", cfg.min_delta);
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return cfg;
}

std::string train_config_to_json(const TrainConfig& c) {
  json j = {{"lr_peak", c.lr_peak},
            {"warmup_epochs", c.warmup_epochs},
            {"main_epochs", c.main_epochs},
            {"plateau_factor", c.plateau_factor},
            {"plateau_patience", c.plateau_patience},
            {"early_stop_patience", c.early_stop_patience},
            {"batch_size", c.batch_size},
            {"theta", c.theta},
            {"seed", c.seed},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon},
            {"min_delta", c.min_delta}};
  return j.dump();
}

double lr_at(int epoch, const TrainConfig& cfg, int reductions) {
  if (epoch < 0) throw ConfigError("epoch must be >= 0");
  if (epoch < cfg.warmup_epochs) {
    return cfg.lr_peak * static_cast<double>(epoch + 1) / static_cast<double>(cfg.warmup_epochs);
  }
  return cfg.lr_peak * std::pow(cfg.plateau_factor, reductions);
}

PlateauScheduler::PlateauScheduler(int patience, double factor, double min_delta)
    : patience_(patience), factor_(factor), min_delta_(min_delta) {
  if (patience < 1) throw ConfigError("plateau patience must be >= 1");
  if (!(factor > 0 && factor < 1)) throw ConfigError("plateau factor must lie in (0, 1)");
}

bool PlateauScheduler::observe(double loss) {
  if (loss < best_ - min_delta_) {
    best_ = loss;
    wait_ = 0;
    return false;
  }
  if (++wait_ >= patience_) {
    wait_ = 0;
    ++reductions_;
    return true;
  }
  return false;
}

double PlateauScheduler::multiplier() const noexcept { return std::pow(factor_, reductions_); }

template <class T>
Adam<T>::Adam(nn::ParamStore<T>& params, double beta1, double beta2, double epsilon)
    : params_(&params), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const auto& p : params.entries()) {
    m_.emplace_back(p.var.value().size(), T{0});
    v_.emplace_back(p.var.value().size(), T{0});
  }
}

template <class T>
void Adam<T>::step(double lr) {
  ++t_;
  const double b1t = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double b2t = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const T lr_t = static_cast<T>(lr * std::sqrt(b2t) / b1t);
  const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_), eps = static_cast<T>(epsilon_);
  auto& entries = params_->entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& var = entries[k].var;
    const Tensor<T>& g = var.grad();
    if (g.empty()) continue;
    T* w = var.mutable_value().data();
    T* m = m_[k].data();
    T* v = v_[k].data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      w[i] -= lr_t * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

std::string TrainHistory::to_json(int indent) const {
  json j;
  j["epochs"] = epochs;
  j["train_loss"] = train_loss;
  j["val_loss"] = val_loss;
  j["lr"] = lr;
  json ev = json::array();
  for (const auto& e : events) ev.push_back({{"epoch", e.epoch}, {"kind", e.kind}, {"value", e.value}});
  j["events"] = ev;
  j["best_epoch"] = best_epoch;
  j["best_val_loss"] = std::isfinite(best_val_loss) ? json(best_val_loss) : json(nullptr);
  j["early_stop_epoch"] = early_stop_epoch;
  return j.dump(indent);
}

namespace {

struct Batch {
  Tensor<float> input, target, mask;
};

Batch make_batch(const std::vector<const TrainingPair*>& pairs) {
  std::vector<const SusceptibilityMap*> maps;
  for (const auto* p : pairs) maps.push_back(&p->input);
  Batch b;
  b.input = stack_inputs<float>(maps);
  b.target = Tensor<float>(b.input.shape());
  b.mask = Tensor<float>(b.input.shape());
  const std::size_t cells = pairs.front()->input.size();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const InundationMap& t = *pairs[k]->target;
    if (!t.depth.same_shape(pairs[k]->input.height(), pairs[k]->input.width())) {
      throw ConsistencyError("training pair target and input shapes differ");
    }
    for (std::size_t i = 0; i < cells; ++i) {
      b.target[k * cells + i] = t.depth.cells()[i];
      b.mask[k * cells + i] = t.mask.cells()[i] ? 1.0f : 0.0f;
    }
  }
  return b;
}

std::vector<std::vector<float>> snapshot(const nn::ParamStore<float>& store) {
  std::vector<std::vector<float>> out;
  for (const auto& p : store.entries()) {
    out.emplace_back(p.var.value().data(), p.var.value().data() + p.var.value().size());
  }
  return out;
}

void restore(nn::ParamStore<float>& store, const std::vector<std::vector<float>>& saved) {
  auto& entries = store.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    std::copy(saved[k].begin(), saved[k].end(), entries[k].var.mutable_value().data());
  }
}

}  // namespace

std::vector<Grid<float>> predict_maps(const CaspianModel<float>& model,
                                      const std::vector<const SusceptibilityMap*>& maps,
                                      int batch_size) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  nn::NoGradGuard guard;
  std::vector<Grid<float>> out;
  out.reserve(maps.size());
  for (std::size_t start = 0; start < maps.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(maps.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const SusceptibilityMap*> chunk(maps.begin() + static_cast<std::ptrdiff_t>(start),
                                                maps.begin() + static_cast<std::ptrdiff_t>(end));
    Var<float> y = model.forward(nn::constant(stack_inputs<float>(chunk)));
    const Tensor<float>& v = y.value();
    const std::size_t cells = static_cast<std::size_t>(v.h()) * static_cast<std::size_t>(v.w());
    for (int b = 0; b < v.n(); ++b) {
      Grid<float> g(v.h(), v.w());
      std::copy(v.data() + b * cells, v.data() + (b + 1) * cells, g.cells().begin());
      out.push_back(std::move(g));
    }
  }
  return out;
}

Trainer::Trainer(CaspianModel<float>& model, TrainConfig cfg)
    : model_(&model), cfg_(cfg), adam_(model.params(), cfg.beta1, cfg.beta2, cfg.epsilon) {
  cfg_.validate();
}

double Trainer::step(const std::vector<const TrainingPair*>& batch, double lr) {
  if (batch.empty()) throw ConfigError("empty training batch");
  Batch b = make_batch(batch);
  model_->params().zero_grad();
  Var<float> pred = model_->forward(nn::constant(std::move(b.input)));
  Var<float> loss = nn::masked_huber(pred, b.target, b.mask, static_cast<float>(cfg_.theta));
  const double value = loss.value()[0];
  if (!std::isfinite(value)) return value;
  nn::backward(loss);
  adam_.step(lr);
  return value;
}

double Trainer::evaluate(const std::vector<TrainingPair>& pairs) const {
  if (pairs.empty()) throw ConfigError("evaluate needs at least one pair");
  std::vector<const SusceptibilityMap*> maps;
  for (const auto& p : pairs) maps.push_back(&p.input);
  const auto preds = predict_maps(*model_, maps, cfg_.batch_size);
  const HuberConfig hc{cfg_.theta};
  double sum = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    InundationMap pm{preds[k], pairs[k].target->mask};
    sum += huber_loss(pm, *pairs[k].target, hc);
  }
  return sum / static_cast<double>(pairs.size());
}

TrainHistory Trainer::fit(const std::vector<TrainingPair>& train_pairs,
                          const std::vector<TrainingPair>& val_pairs,
                          const std::function<void(const EpochRecord&)>& on_epoch) {
  if (train_pairs.empty() || val_pairs.empty()) throw ConfigError("training and validation splits must be non-empty");
  TrainHistory hist;
  PlateauScheduler plateau(cfg_.plateau_patience, cfg_.plateau_factor, cfg_.min_delta);
  double main_best = std::numeric_limits<double>::infinity();
  int since_main_best = 0;
  std::vector<std::vector<float>> best_params = snapshot(model_->params());

  std::vector<std::size_t> order(train_pairs.size());
  const int total = cfg_.warmup_epochs + cfg_.main_epochs;
  for (int epoch = 0; epoch < total; ++epoch) {
    const double lr = lr_at(epoch, cfg_, plateau.reductions());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg_.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg_.batch_size));
      std::vector<const TrainingPair*> batch;
      for (std::size_t k = start; k < end; ++k) batch.push_back(&train_pairs[order[k]]);
      const double loss = step(batch, lr);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss " << loss << " at epoch " << epoch << ", batch " << batch_index;
        throw NumericError(msg.str());
      }
      loss_sum += loss * static_cast<double>(batch.size());
      ++batch_index;
    }
    const double train_loss = loss_sum / static_cast<double>(train_pairs.size());
    const double val_loss = evaluate(val_pairs);
    if (!std::isfinite(val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }

    hist.epochs.push_back(epoch);
    hist.train_loss.push_back(train_loss);
    hist.val_loss.push_back(val_loss);
    hist.lr.push_back(lr);
    if (val_loss < hist.best_val_loss) {
      hist.best_val_loss = val_loss;
      hist.best_epoch = epoch;
      best_params = snapshot(model_->params());
    }
    if (on_epoch) on_epoch(EpochRecord{epoch, train_loss, val_loss, lr});

    if (epoch < cfg_.warmup_epochs) continue;
    if (val_loss < main_best - cfg_.min_delta) {
      main_best = val_loss;
      since_main_best = 0;
    } else {
      ++since_main_best;
    }
    if (plateau.observe(val_loss)) {
      hist.events.push_back(TrainEvent{epoch, "plateau", cfg_.lr_peak * plateau.multiplier()});
    }
    if (since_main_best >= cfg_.early_stop_patience) {
      hist.early_stop_epoch = epoch;
      hist.events.push_back(TrainEvent{epoch, "early_stop", main_best});
      break;
    }
  }
  restore(model_->params(), best_params);
  return hist;
}

TrainHistory train(CaspianModel<float>& model, const std::vector<TrainingPair>& train_pairs,
                   const std::vector<TrainingPair>& val_pairs, const TrainConfig& cfg,
                   const std::function<void(const EpochRecord&)>& on_epoch) {
  Trainer t(model, cfg);
  return t.fit(train_pairs, val_pairs, on_epoch);
}

}  // namespace coastal
