#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "coastal/nn/graph.hpp"

namespace coastal::nn {

enum class Initializer { glorot_normal, zeros };

Initializer parse_initializer(std::string_view name);
std::string_view to_string(Initializer init) noexcept;

std::size_t conv_param_count(int kh, int kw, int in_ch, int out_ch, int groups = 1);
std::size_t transposed_conv_param_count(int kh, int kw, int in_ch, int out_ch);
std::size_t dense_param_count(int in, int out);

/// Normal truncated at 2 sigma, with sigma chosen so the truncated draws have
/// stddev sqrt(2 / (fan_in + fan_out)). A (kh, kw, in, out) kernel has
/// fan_in = kh*kw*in and fan_out = kh*kw*out.
template <class T>
Tensor<T> glorot_normal(Shape shape, std::mt19937_64& rng);

template <class T>
struct Parameter {
  std::string name;
  Var<T> var;
  Initializer init = Initializer::zeros;
};

/// Ordered, named trainable tensors.
template <class T>
class ParamStore {
 public:
  Var<T> add(std::string name, Shape shape, Initializer init, std::mt19937_64& rng);

  const std::vector<Parameter<T>>& entries() const noexcept { return entries_; }
  std::vector<Parameter<T>>& entries() noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  /// Total trainable scalars.
  std::size_t count() const noexcept;
  const Var<T>& get(std::string_view name) const;
  void zero_grad();

  /// Values copied (and cast) from a store with identical names and shapes.
  template <class U>
  void assign_from(const ParamStore<U>& other) {
    if (other.size() != entries_.size()) throw ConsistencyError("parameter stores differ in size");
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& src = other.entries()[k];
      auto& dst = entries_[k];
      if (src.name != dst.name || !(src.var.shape() == dst.var.shape())) {
        throw ConsistencyError("parameter '" + dst.name + "' does not match '" + src.name + "'");
      }
      dst.var.mutable_value() = src.var.value().template cast<T>();
    }
  }

 private:
  std::vector<Parameter<T>> entries_;
};

}  // namespace coastal::nn
