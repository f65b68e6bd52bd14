#include "coastal/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "coastal/nn/ops.hpp"

namespace coastal::nn {

namespace {

double objective(const std::function<Var<double>()>& graph, const Tensor<double>& projection) {
  NoGradGuard guard;
  const Var<double> out = graph();
  double acc = 0.0;
  for (std::size_t k = 0; k < projection.size(); ++k) acc += out.value()[k] * projection[k];
  if (!std::isfinite(acc)) throw NumericError("grad_check: non-finite objective");
  return acc;
}

}  // namespace

GradCheckReport grad_check(const std::function<Var<double>()>& graph, const std::vector<Var<double>>& leaves,
                           const GradCheckOptions& options) {
  for (const auto& leaf : leaves) {
    if (!leaf.requires_grad()) throw ConfigError("grad_check leaves must require gradients");
    for (double v : leaf.value().values()) {
      if (!std::isfinite(v)) throw NumericError("grad_check: non-finite leaf value");
    }
  }

  Var<double> out = graph();
  for (double v : out.value().values()) {
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite forward output");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Tensor<double> projection(out.shape());
  for (auto& r : projection.values()) r = uniform(rng);

  for (auto leaf : leaves) leaf.zero_grad();
  backward(weighted_sum(out, projection));
  out = Var<double>();

  GradCheckReport report;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Var<double> leaf = leaves[li];
    const Tensor<double> analytic = leaf.grad().empty() ? Tensor<double>(leaf.shape()) : leaf.grad();
    Tensor<double>& value = leaf.mutable_value();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value[k];
      value[k] = saved + options.eps;
      const double up = objective(graph, projection);
      value[k] = saved - options.eps;
      const double down = objective(graph, projection);
      value[k] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = analytic[k];
      if (!std::isfinite(a)) throw NumericError("grad_check: non-finite analytic gradient");
      const double err =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
      ++report.coordinates;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_leaf = li;
        report.worst_index = k;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace coastal::nn
