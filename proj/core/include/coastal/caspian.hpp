#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coastal/errors.hpp"
#include "coastal/nn/ops.hpp"
#include "coastal/nn/params.hpp"

namespace coastal {

/// Architecture variants: the full network and its four ablations.
enum class Variant {
  full,
  no_channel_sum,      ///< "B": head without the channel summation
  shallow_bottleneck,  ///< "Gamma": M forced to 2
  no_modulation,       ///< "Z": modulation block removed
  no_pooling_path,     ///< "Omega": pooling path, concatenations and modulation removed
};

Variant parse_variant(std::string_view name);
std::string_view to_string(Variant v) noexcept;

struct ModelConfig {
  int H = 1024;
  int W = 1024;
  int F = 72;  ///< filters per block, constant across levels
  int K = 4;   ///< downsampling depth
  int C = 34;  ///< bottleneck cardinality
  int M = 8;   ///< bottleneck block count
  int w = 4;   ///< bottleneck group width
  int modulation_level = 1;
  double r_ratio = 0.85;
  nn::Activation activation = nn::Activation::tanh;
  nn::Initializer init = nn::Initializer::glorot_normal;
  Variant variant = Variant::full;
  std::uint64_t seed = 0;

  /// Modulation hidden width, floor(r_ratio * F).
  int r() const;
  /// Bottleneck inner width C * w.
  int D() const { return C * w; }
  bool has_pooling_path() const { return variant != Variant::no_pooling_path; }
  bool has_modulation() const {
    return variant != Variant::no_modulation && variant != Variant::no_pooling_path;
  }
  bool has_channel_sum() const { return variant != Variant::no_channel_sum; }
  int bottleneck_blocks() const { return variant == Variant::shallow_bottleneck ? 2 : M; }

  void validate() const;

  /// 1024^2, F=72, K=4, C=34, M=8, w=4, r=61.
  static ModelConfig paper();
  /// 128^2, F=16, K=3, C=4, w=2, M=2, r=13.
  static ModelConfig desk();
};

/// JSON object with keys H, W, F, K, C, M, w, modulation_level, r_ratio,
/// activation, init, variant, seed.
std::string model_config_to_json(const ModelConfig& cfg);
/// Accepts either that object or a document holding it under "model".
/// Missing keys keep `base` values.
ModelConfig model_config_from_json(std::string_view json, const ModelConfig& base = {});

/// Per-class indicator channels of a {-1, 0, +1} map: channel 0 marks +1,
/// channel 1 marks -1. Throws ConsistencyError on any other value.
template <class T>
nn::Tensor<T> class_indicators(const nn::Tensor<T>& x);

/// Indicators max-pooled by 2: (N, H/2, W/2, 2).
template <class T>
nn::Tensor<T> segregated_pooling(const nn::Tensor<T>& x);

/// Levels 1..K of repeated 2x2 max pooling, starting from `seg` as level 1.
template <class T>
std::vector<nn::Tensor<T>> pooling_cascade(const nn::Tensor<T>& seg, int K);

template <class T>
struct ResNeXtParams {
  nn::Var<T> reduce_kernel, reduce_bias;  ///< pointwise F -> D
  nn::Var<T> group_kernel, group_bias;    ///< grouped 3x3 D -> D
  nn::Var<T> expand_kernel, expand_bias;  ///< pointwise D -> F
};

/// x + expand(act(grouped(act(reduce(x))))).
template <class T>
nn::Var<T> resnext_block(const nn::Var<T>& x, const ResNeXtParams<T>& p, int cardinality,
                         nn::Activation act);

std::size_t resnext_param_count(int F, int C, int w);

template <class T>
struct ModulationParams {
  nn::Var<T> hidden_weight, hidden_bias;  ///< dense 2 -> r
  nn::Var<T> out_weight, out_bias;        ///< dense r -> F
};

/// Global average of the pooling maps, dense+tanh, dense+sigmoid:
/// (N, 1, 1, F) channel weights in (0, 1).
template <class T>
nn::Var<T> modulation_block(const nn::Var<T>& pool_maps, const ModulationParams<T>& p);

std::size_t modulation_param_count(int F, int r);

/// Shapes of named intermediate outputs, filled in by forward() on request.
struct ForwardTrace {
  std::vector<std::pair<std::string, nn::Shape>> shapes;
};

template <class T>
class CaspianModel {
 public:
  explicit CaspianModel(ModelConfig cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  nn::ParamStore<T>& params() noexcept { return params_; }
  const nn::ParamStore<T>& params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.count(); }

  /// (N, H, W, 1) susceptibility maps -> (N, H, W, 1) non-negative depths.
  /// With `apply_output_relu` false the head's pre-activation is returned.
  nn::Var<T> forward(const nn::Var<T>& input, ForwardTrace* trace = nullptr,
                     bool apply_output_relu = true) const;

 private:
  struct EncoderBlock {
    nn::Var<T> conv_kernel, conv_bias;
    nn::Var<T> pw_kernel, pw_bias;
  };
  struct DecoderBlock {
    nn::Var<T> up_kernel, up_bias;
    nn::Var<T> pw_kernel, pw_bias;
  };

  ModelConfig cfg_;
  nn::ParamStore<T> params_;
  std::vector<EncoderBlock> encoder_;
  std::vector<ResNeXtParams<T>> bottleneck_;
  std::vector<DecoderBlock> decoder_;
  ModulationParams<T> modulation_;
  nn::Var<T> head_kernel_, head_bias_;
};

template <class T>
CaspianModel<T> build_caspian(const ModelConfig& cfg) {
  return CaspianModel<T>(cfg);
}

/// Same config with `variant` applied (Gamma also forces M = 2).
template <class T>
CaspianModel<T> build_ablation(ModelConfig cfg, Variant variant) {
  cfg.variant = variant;
  if (variant == Variant::shallow_bottleneck) cfg.M = 2;
  return CaspianModel<T>(cfg);
}

template <class T>
std::size_t count_params(const nn::ParamStore<T>& store) {
  return store.count();
}
template <class T>
std::size_t count_params(const CaspianModel<T>& model) {
  return model.parameter_count();
}

/// Parameter total from per-layer formulas, without building the model.
std::size_t closed_form_param_count(const ModelConfig& cfg);

/// Checkpoint directory: manifest.json (config under metadata.model plus
/// `extra_metadata` keys) and one float32 blob per parameter.
void save_checkpoint(const CaspianModel<float>& model, const std::filesystem::path& dir,
                     const std::string& extra_metadata_json = "{}");

struct LoadedCheckpoint {
  CaspianModel<float> model;
  std::string metadata_json;
  std::string fingerprint;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

/// Builds an (N, H, W, 1) input tensor from susceptibility maps.
template <class T, class MapRange>
nn::Tensor<T> stack_inputs(const MapRange& maps) {
  std::size_t n = 0;
  for (const auto* m : maps) {
    (void)m;
    ++n;
  }
  if (n == 0) throw ConfigError("stack_inputs needs at least one map");
  const auto* first = *maps.begin();
  nn::Tensor<T> out(nn::Shape{static_cast<int>(n), first->height(), first->width(), 1});
  std::size_t b = 0;
  for (const auto* m : maps) {
    if (!m->same_shape(first->height(), first->width())) {
      throw ConsistencyError("stack_inputs: maps differ in shape");
    }
    const std::size_t base = b * m->size();
    for (std::size_t k = 0; k < m->size(); ++k) out[base + k] = static_cast<T>(m->cells()[k]);
    ++b;
  }
  return out;
}

}  // namespace coastal
