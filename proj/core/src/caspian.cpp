#include "coastal/caspian.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "coastal/blob_store.hpp"
#include "json.hpp"

namespace coastal {

using json = nlohmann::json;
using nn::Activation;
using nn::Initializer;
using nn::Padding;
using nn::PoolMode;
using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

Variant parse_variant(std::string_view name) {
  const std::string s = lower(name);
  if (s == "full" || s == "caspian") return Variant::full;
  if (s == "b") return Variant::no_channel_sum;
  if (s == "gamma" || s == "g") return Variant::shallow_bottleneck;
  if (s == "z") return Variant::no_modulation;
  if (s == "omega" || s == "o") return Variant::no_pooling_path;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, B, Gamma, Z, Omega)");
}

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_channel_sum: return "B";
    case Variant::shallow_bottleneck: return "Gamma";
    case Variant::no_modulation: return "Z";
    case Variant::no_pooling_path: return "Omega";
  }
  return "full";
}

int ModelConfig::r() const { return static_cast<int>(std::floor(r_ratio * F + 1e-9)); }

void ModelConfig::validate() const {
  if (F < 1) throw ConfigError("F must be >= 1");
  if (K < 1) throw ConfigError("K must be >= 1");
  if (C < 1 || w < 1) throw ConfigError("C and w must be >= 1");
  if (M < 0) throw ConfigError("M must be >= 0");
  if (H < 1 || W < 1) throw ConfigError("H and W must be >= 1");
  if (K >= 31) throw ConfigError("K too large");
  const int step = 1 << K;
  if (H % step != 0 || W % step != 0) {
    throw ConfigError("H and W must be divisible by 2^K = " + std::to_string(step) + ", got " +
                      std::to_string(H) + "x" + std::to_string(W));
  }
  if (modulation_level < 1 || modulation_level > K) {
    throw ConfigError("modulation_level must lie in [1, K]");
  }
  if (has_modulation() && r() < 1) throw ConfigError("r = floor(r_ratio * F) must be >= 1");
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.H = 128;
  c.W = 128;
  c.F = 16;
  c.K = 3;
  c.C = 4;
  c.w = 2;
  c.M = 2;
  c.r_ratio = 0.85;
  return c;
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json j = {{"H", cfg.H},
            {"W", cfg.W},
            {"F", cfg.F},
            {"K", cfg.K},
            {"C", cfg.C},
            {"M", cfg.M},
            {"w", cfg.w},
            {"modulation_level", cfg.modulation_level},
            {"r_ratio", cfg.r_ratio},
            {"activation", std::string(nn::to_string(cfg.activation))},
            {"init", std::string(nn::to_string(cfg.init))},
            {"variant", std::string(to_string(cfg.variant))},
            {"seed", cfg.seed}};
  return j.dump();
}

ModelConfig model_config_from_json(std::string_view text, const ModelConfig& base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
  if (doc.is_object() && doc.contains("model")) doc = doc["model"];
  if (!doc.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig cfg = base;
  try {
    auto get_int = [&](const char* key, int& dst) {
      if (doc.contains(key)) dst = doc.at(key).get<int>();
    };
    get_int("H", cfg.H);
    get_int("W", cfg.W);
    get_int("F", cfg.F);
    get_int("K", cfg.K);
    get_int("C", cfg.C);
    get_int("M", cfg.M);
    get_int("w", cfg.w);
    get_int("modulation_level", cfg.modulation_level);
    if (doc.contains("r_ratio")) cfg.r_ratio = doc.at("r_ratio").get<double>();
    if (doc.contains("activation")) {
      cfg.activation = nn::parse_activation(doc.at("activation").get<std::string>());
    }
    if (doc.contains("init")) cfg.init = nn::parse_initializer(doc.at("init").get<std::string>());
    if (doc.contains("variant")) cfg.variant = parse_variant(doc.at("variant").get<std::string>());
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return cfg;
}

template <class T>
Tensor<T> class_indicators(const Tensor<T>& x) {
  if (x.c() != 1) throw ConfigError("class_indicators expects 1 channel, got " + x.shape().str());
  Shape s = x.shape();
  s.c = 2;
  Tensor<T> out(s);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const T v = x[k];
    if (v == T(1)) {
      out[2 * k] = T(1);
    } else if (v == T(-1)) {
      out[2 * k + 1] = T(1);
    } else if (v != T(0)) {
      throw ConsistencyError("susceptibility values must be -1, 0 or +1");
    }
  }
  return out;
}

template <class T>
Tensor<T> segregated_pooling(const Tensor<T>& x) {
  nn::NoGradGuard guard;
  return nn::pool2d(nn::constant(class_indicators(x)), 2, 2, PoolMode::max).value();
}

template <class T>
std::vector<Tensor<T>> pooling_cascade(const Tensor<T>& seg, int K) {
  if (K < 1) throw ConfigError("pooling_cascade needs K >= 1");
  nn::NoGradGuard guard;
  std::vector<Tensor<T>> levels;
  levels.reserve(static_cast<std::size_t>(K));
  levels.push_back(seg);
  for (int k = 1; k < K; ++k) {
    levels.push_back(nn::pool2d(nn::constant(levels.back()), 2, 2, PoolMode::max).value());
  }
  return levels;
}

template <class T>
Var<T> resnext_block(const Var<T>& x, const ResNeXtParams<T>& p, int cardinality, Activation act) {
  const Shape& rk = p.reduce_kernel.shape();
  if (x.shape().c != rk.w || p.expand_kernel.shape().c != x.shape().c) {
    throw ConfigError("resnext_block: input " + x.shape().str() + " does not match block width");
  }
  auto h = nn::activate(nn::conv2d(x, p.reduce_kernel, p.reduce_bias), act);
  h = nn::activate(nn::conv2d(h, p.group_kernel, p.group_bias, 1, cardinality), act);
  h = nn::conv2d(h, p.expand_kernel, p.expand_bias);
  return nn::add(x, h);
}

std::size_t resnext_param_count(int F, int C, int w) {
  const int D = C * w;
  return nn::conv_param_count(1, 1, F, D) + nn::conv_param_count(3, 3, D, D, C) +
         nn::conv_param_count(1, 1, D, F);
}

template <class T>
Var<T> modulation_block(const Var<T>& pool_maps, const ModulationParams<T>& p) {
  if (pool_maps.shape().c != 2) {
    throw ConfigError("modulation_block expects 2 pooling channels, got " + pool_maps.shape().str());
  }
  auto g = nn::global_avg_pool(pool_maps);
  auto h = nn::activate(nn::dense(g, p.hidden_weight, p.hidden_bias), Activation::tanh);
  return nn::activate(nn::dense(h, p.out_weight, p.out_bias), Activation::sigmoid);
}

std::size_t modulation_param_count(int F, int r) {
  return nn::dense_param_count(2, r) + nn::dense_param_count(r, F);
}

std::size_t closed_form_param_count(const ModelConfig& cfg) {
  cfg.validate();
  const int F = cfg.F;
  const int extra = cfg.has_pooling_path() ? 2 : 0;
  std::size_t total = nn::conv_param_count(3, 3, 1, F);
  total += nn::conv_param_count(1, 1, F + extra, F);
  for (int k = 2; k <= cfg.K; ++k) {
    total += nn::conv_param_count(3, 3, F, F, F);
    total += nn::conv_param_count(1, 1, F + extra, F);
  }
  total += static_cast<std::size_t>(cfg.bottleneck_blocks()) * resnext_param_count(F, cfg.C, cfg.w);
  for (int k = 1; k <= cfg.K; ++k) {
    total += nn::transposed_conv_param_count(2, 2, F, F);
    total += nn::conv_param_count(1, 1, F + extra, F);
  }
  if (cfg.has_modulation()) total += modulation_param_count(F, cfg.r());
  total += nn::conv_param_count(1, 1, F, 1);
  return total;
}

template <class T>
CaspianModel<T>::CaspianModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  const int F = cfg_.F;
  const int D = cfg_.D();
  const int extra = cfg_.has_pooling_path() ? 2 : 0;
  const Initializer kinit = cfg_.init;
  const Initializer zero = Initializer::zeros;
  auto bias = [&](const std::string& name, int ch) {
    return params_.add(name, Shape{1, 1, 1, ch}, zero, rng);
  };

  for (int k = 1; k <= cfg_.K; ++k) {
    const std::string pre = "enc" + std::to_string(k) + ".";
    EncoderBlock b;
    // Block 1 convolves the 1-channel input; later blocks are depthwise.
    b.conv_kernel = params_.add(pre + (k == 1 ? "conv.kernel" : "dw.kernel"), Shape{3, 3, 1, F},
                                kinit, rng);
    b.conv_bias = bias(pre + (k == 1 ? "conv.bias" : "dw.bias"), F);
    b.pw_kernel = params_.add(pre + "pw.kernel", Shape{1, 1, F + extra, F}, kinit, rng);
    b.pw_bias = bias(pre + "pw.bias", F);
    encoder_.push_back(std::move(b));
  }
  for (int m = 1; m <= cfg_.bottleneck_blocks(); ++m) {
    const std::string pre = "bottleneck" + std::to_string(m) + ".";
    ResNeXtParams<T> p;
    p.reduce_kernel = params_.add(pre + "reduce.kernel", Shape{1, 1, F, D}, kinit, rng);
    p.reduce_bias = bias(pre + "reduce.bias", D);
    p.group_kernel = params_.add(pre + "group.kernel", Shape{3, 3, cfg_.w, D}, kinit, rng);
    p.group_bias = bias(pre + "group.bias", D);
    p.expand_kernel = params_.add(pre + "expand.kernel", Shape{1, 1, D, F}, kinit, rng);
    p.expand_bias = bias(pre + "expand.bias", F);
    bottleneck_.push_back(std::move(p));
  }
  for (int k = 1; k <= cfg_.K; ++k) {
    const std::string pre = "dec" + std::to_string(k) + ".";
    DecoderBlock b;
    b.up_kernel = params_.add(pre + "up.kernel", Shape{2, 2, F, F}, kinit, rng);
    b.up_bias = bias(pre + "up.bias", F);
    b.pw_kernel = params_.add(pre + "pw.kernel", Shape{1, 1, F + extra, F}, kinit, rng);
    b.pw_bias = bias(pre + "pw.bias", F);
    decoder_.push_back(std::move(b));
  }
  if (cfg_.has_modulation()) {
    const int r = cfg_.r();
    modulation_.hidden_weight = params_.add("mod.hidden.weight", Shape{1, 1, 2, r}, kinit, rng);
    modulation_.hidden_bias = bias("mod.hidden.bias", r);
    modulation_.out_weight = params_.add("mod.out.weight", Shape{1, 1, r, F}, kinit, rng);
    modulation_.out_bias = bias("mod.out.bias", F);
  }
  head_kernel_ = params_.add("head.kernel", Shape{1, 1, F, 1}, kinit, rng);
  head_bias_ = bias("head.bias", 1);
}

template <class T>
Var<T> CaspianModel<T>::forward(const Var<T>& input, ForwardTrace* trace,
                                bool apply_output_relu) const {
  const Shape& s = input.shape();
  if (s.h != cfg_.H || s.w != cfg_.W || s.c != 1) {
    throw ConsistencyError("model expects (N, " + std::to_string(cfg_.H) + ", " +
                           std::to_string(cfg_.W) + ", 1) input, got " + s.str());
  }
  auto note = [&](const std::string& name, const Var<T>& v) {
    if (trace) trace->shapes.emplace_back(name, v.shape());
  };
  const Activation act = cfg_.activation;
  const int K = cfg_.K;

  // levels[0] holds the unpooled indicators, levels[k] the k-th pooling level.
  std::vector<Var<T>> levels;
  if (cfg_.has_pooling_path()) {
    Tensor<T> ind = class_indicators(input.value());
    std::vector<Tensor<T>> cascade = pooling_cascade(segregated_pooling(input.value()), K);
    levels.push_back(nn::constant(std::move(ind)));
    for (auto& t : cascade) levels.push_back(nn::constant(std::move(t)));
  }

  Var<T> h = input;
  for (int k = 1; k <= K; ++k) {
    const EncoderBlock& b = encoder_[static_cast<std::size_t>(k - 1)];
    Var<T> t = nn::conv2d(h, b.conv_kernel, b.conv_bias, 2, k == 1 ? 1 : cfg_.F);
    if (cfg_.has_pooling_path()) t = nn::concat_channels(t, levels[static_cast<std::size_t>(k)]);
    t = nn::activate(nn::conv2d(t, b.pw_kernel, b.pw_bias), act);
    if (k > 1) t = nn::add(t, nn::pool2d(h, 2, 2, PoolMode::avg));
    h = std::move(t);
    note("enc" + std::to_string(k), h);
  }
  for (std::size_t m = 0; m < bottleneck_.size(); ++m) {
    h = resnext_block(h, bottleneck_[m], cfg_.C, act);
    note("bottleneck" + std::to_string(m + 1), h);
  }
  Var<T> weights;
  for (int j = 1; j <= K; ++j) {
    const DecoderBlock& b = decoder_[static_cast<std::size_t>(j - 1)];
    Var<T> t = nn::conv_transpose2d(h, b.up_kernel, b.up_bias, 2);
    if (cfg_.has_pooling_path()) {
      const Var<T>& maps = levels[static_cast<std::size_t>(K - j)];
      t = nn::concat_channels(t, maps);
      t = nn::activate(nn::conv2d(t, b.pw_kernel, b.pw_bias), act);
      if (cfg_.has_modulation() && j == cfg_.modulation_level) {
        weights = modulation_block(maps, modulation_);
      }
    } else {
      t = nn::activate(nn::conv2d(t, b.pw_kernel, b.pw_bias), act);
    }
    if (weights.defined()) t = nn::scale_channels(t, weights);
    h = std::move(t);
    note("dec" + std::to_string(j), h);
  }
  Var<T> y = nn::conv2d(h, head_kernel_, head_bias_);
  if (cfg_.has_channel_sum()) y = nn::add(y, nn::channel_sum(h));
  if (apply_output_relu) y = nn::activate(y, Activation::relu);
  note("output", y);
  return y;
}

void save_checkpoint(const CaspianModel<float>& model, const std::filesystem::path& dir,
                     const std::string& extra_metadata_json) {
  json meta;
  try {
    meta = json::parse(extra_metadata_json);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint metadata: ") + e.what());
  }
  if (!meta.is_object()) throw ConfigError("checkpoint metadata must be a JSON object");
  meta["model"] = json::parse(model_config_to_json(model.config()));
  meta["parameter_count"] = model.parameter_count();

  BlobBundle bundle;
  bundle.metadata_json = meta.dump();
  for (const auto& p : model.params().entries()) {
    const Shape& s = p.var.shape();
    BlobEntry e;
    e.name = p.name;
    e.shape = {s.n, s.h, s.w, s.c};
    e.initializer = std::string(nn::to_string(p.init));
    e.data.assign(p.var.value().data(), p.var.value().data() + p.var.value().size());
    bundle.tensors.push_back(std::move(e));
  }
  write_blob_bundle(dir, bundle);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  BlobBundle bundle = read_blob_bundle(dir);
  json meta = json::parse(bundle.metadata_json);
  if (!meta.contains("model")) throw LoadError("checkpoint metadata has no model config");
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(meta["model"].dump());
  } catch (const Error& e) {
    throw LoadError(std::string("checkpoint config: ") + e.what());
  }
  CaspianModel<float> model(cfg);
  auto& entries = model.params().entries();
  if (entries.size() != bundle.tensors.size()) {
    throw LoadError("checkpoint holds " + std::to_string(bundle.tensors.size()) +
                    " tensors, model expects " + std::to_string(entries.size()));
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const BlobEntry& e = bundle.tensors[k];
    auto& p = entries[k];
    const Shape& s = p.var.shape();
    if (e.name != p.name || e.shape != std::vector<int>{s.n, s.h, s.w, s.c}) {
      throw LoadError("checkpoint tensor '" + e.name + "' does not match parameter '" + p.name + "'");
    }
    std::copy(e.data.begin(), e.data.end(), p.var.mutable_value().data());
  }
  return LoadedCheckpoint{std::move(model), bundle.metadata_json, bundle_fingerprint(dir)};
}

#define COASTAL_INSTANTIATE(T)                                                                    \
  template Tensor<T> class_indicators<T>(const Tensor<T>&);                                       \
  template Tensor<T> segregated_pooling<T>(const Tensor<T>&);                                     \
  template std::vector<Tensor<T>> pooling_cascade<T>(const Tensor<T>&, int);                      \
  template Var<T> resnext_block<T>(const Var<T>&, const ResNeXtParams<T>&, int, Activation);      \
  template Var<T> modulation_block<T>(const Var<T>&, const ModulationParams<T>&);                 \
  template class CaspianModel<T>;

COASTAL_INSTANTIATE(float)
COASTAL_INSTANTIATE(double)

#undef COASTAL_INSTANTIATE

}  // namespace coastal
