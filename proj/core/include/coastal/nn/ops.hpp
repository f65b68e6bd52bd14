#pragma once

#include <string_view>

#include "coastal/nn/graph.hpp"

namespace coastal::nn {

enum class Padding { same, valid };
enum class PoolMode { max, avg };
enum class Activation { tanh, relu, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a) noexcept;

/// 'same': ceil(in / stride); 'valid': floor((in - k) / stride) + 1.
int conv_output_size(int in, int kernel, int stride, Padding padding);
/// Ceil division; edge windows are clipped.
int pool_output_size(int in, int stride);

template <class T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

/// Grouped cross-correlation. `kernel` is laid out (kh, kw, in/groups, out)
/// and `bias` (1, 1, 1, out) or undefined. 'same' padding puts the extra
/// cell on the bottom/right.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, int stride = 1,
              int groups = 1, Padding padding = Padding::same);

/// Upsampling by `stride`; output spatial size is input * stride.
/// `kernel` is laid out (kh, kw, in, out).
template <class T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, int stride);

template <class T>
Var<T> pool2d(const Var<T>& x, int window, int stride, PoolMode mode);

/// Affine map over the channel axis of an (N, 1, 1, in) input; `weight` is
/// (1, 1, in, out).
template <class T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <class T>
Var<T> activate(const Var<T>& x, Activation kind);

template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);

/// x * s broadcast over space; s is (N, 1, 1, C).
template <class T>
Var<T> scale_channels(const Var<T>& x, const Var<T>& s);

/// (N, H, W, C) -> (N, H, W, 1).
template <class T>
Var<T> channel_sum(const Var<T>& x);

/// (N, H, W, C) -> (N, 1, 1, C).
template <class T>
Var<T> global_avg_pool(const Var<T>& x);

/// Mean Huber penalty over cells where mask != 0, as a (1, 1, 1, 1) scalar.
template <class T>
Var<T> masked_huber(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>& mask, T theta);

/// sum(x * weights) as a (1, 1, 1, 1) scalar.
template <class T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights);

}  // namespace coastal::nn
