#include "coastal/nn/params.hpp"

#include <cmath>

namespace coastal::nn {

Initializer parse_initializer(std::string_view name) {
  if (name == "glorot_normal") return Initializer::glorot_normal;
  if (name == "zeros") return Initializer::zeros;
  throw ConfigError("unknown initializer '" + std::string(name) + "'");
}

std::string_view to_string(Initializer init) noexcept {
  return init == Initializer::glorot_normal ? "glorot_normal" : "zeros";
}

std::size_t conv_param_count(int kh, int kw, int in_ch, int out_ch, int groups) {
  if (groups < 1 || in_ch % groups != 0 || out_ch % groups != 0) {
    throw ConfigError("channel counts not divisible by groups");
  }
  return static_cast<std::size_t>(kh) * kw * (in_ch / groups) * out_ch + static_cast<std::size_t>(out_ch);
}

std::size_t transposed_conv_param_count(int kh, int kw, int in_ch, int out_ch) {
  return static_cast<std::size_t>(kh) * kw * in_ch * out_ch + static_cast<std::size_t>(out_ch);
}

std::size_t dense_param_count(int in, int out) {
  return static_cast<std::size_t>(in) * out + static_cast<std::size_t>(out);
}

template <class T>
Tensor<T> glorot_normal(Shape shape, std::mt19937_64& rng) {
  const double receptive = static_cast<double>(shape.n) * shape.h;
  const double fan_in = receptive * shape.w;
  const double fan_out = receptive * shape.c;
  // Correction for the variance lost by truncating at two standard deviations.
  const double stddev = std::sqrt(2.0 / (fan_in + fan_out)) / 0.87962566103423978;
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor<T> out(shape);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double z = normal(rng);
    while (std::abs(z) > 2.0) z = normal(rng);
    out[k] = static_cast<T>(z * stddev);
  }
  return out;
}

template <class T>
Var<T> ParamStore<T>::add(std::string name, Shape shape, Initializer init, std::mt19937_64& rng) {
  for (const auto& e : entries_) {
    if (e.name == name) throw ConfigError("duplicate parameter name '" + name + "'");
  }
  Tensor<T> value = init == Initializer::glorot_normal ? glorot_normal<T>(shape, rng) : Tensor<T>(shape);
  Var<T> var(std::move(value), true);
  entries_.push_back({std::move(name), var, init});
  return var;
}

template <class T>
std::size_t ParamStore<T>::count() const noexcept {
  std::size_t total = 0;
  for (const auto& e : entries_) total += e.var.value().size();
  return total;
}

template <class T>
const Var<T>& ParamStore<T>::get(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.var;
  }
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

template <class T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

template Tensor<float> glorot_normal<float>(Shape, std::mt19937_64&);
template Tensor<double> glorot_normal<double>(Shape, std::mt19937_64&);
template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace coastal::nn
