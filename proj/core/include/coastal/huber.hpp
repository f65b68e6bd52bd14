#pragma once

#include <cmath>

namespace coastal {

/// 0.5 d^2 for |d| <= theta, theta |d| - 0.5 theta^2 beyond.
template <class T>
T huber(T delta, T theta) {
  const T a = std::abs(delta);
  return a <= theta ? T(0.5) * delta * delta : theta * a - T(0.5) * theta * theta;
}

template <class T>
T huber_derivative(T delta, T theta) {
  if (std::abs(delta) <= theta) return delta;
  return delta > T(0) ? theta : -theta;
}

}  // namespace coastal
