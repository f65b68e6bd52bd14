#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "coastal/nn/graph.hpp"

namespace coastal::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t worst_leaf = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// Denominator floor for |a - n| / max(|a|, |n|, floor).
  double floor = 1e-7;
  std::uint64_t seed = 0x5eed;
};

/// Compares reverse-mode gradients of sum(graph() * r), with r a fixed
/// random projection, against central differences over every element of
/// every leaf. `graph` must rebuild its output from the current leaf values.
GradCheckReport grad_check(const std::function<Var<double>()>& graph, const std::vector<Var<double>>& leaves,
                           const GradCheckOptions& options = {});

}  // namespace coastal::nn
