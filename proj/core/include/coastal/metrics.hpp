#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "coastal/grid.hpp"

namespace coastal {

struct HuberConfig {
  double theta = 0.5;  ///< meters
};

/// Mean Huber penalty of pred - target over the target's masked cells.
/// Shapes and masks must agree; an empty mask is a ConsistencyError.
double huber_loss(const InundationMap& pred, const InundationMap& target, const HuberConfig& cfg);

/// Mean and per-sample standard deviation (population) of one metric over the
/// samples where it is defined.
struct MetricStat {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

struct DeltaExceed {
  double delta = 0.0;
  MetricStat stat;
};

struct MetricsReport {
  MetricStat amae;
  MetricStat armse;
  MetricStat artae;
  std::vector<DeltaExceed> delta_exceed;
  MetricStat r2;
  MetricStat acc0;          ///< dry-location accuracy
  MetricStat acc0_literal;  ///< fraction of true zeros, independent of predictions
  std::size_t n_samples = 0;
  std::vector<std::string> warnings;

  /// Mean exceedance fraction for `delta`; throws ConfigError if absent.
  double delta_gt(double delta) const;
};

inline constexpr double kDryTolerance = 1e-6;

std::vector<double> default_deltas();

MetricsReport compute_metrics(const std::vector<DepthVector>& preds,
                              const std::vector<DepthVector>& targets,
                              const std::vector<double>& deltas = default_deltas());

/// "delta_gt_0_5" style key for a threshold.
std::string delta_key(double delta);

/// Means under amae, armse, artae, delta_gt_*, r2, acc0, acc0_literal,
/// n_samples; per-sample spreads under "std"; skipped terms under "warnings".
std::string metrics_to_json(const MetricsReport& report, int indent = 2);

}  // namespace coastal
