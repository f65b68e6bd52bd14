#include "coastal/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "coastal/errors.hpp"
#include "coastal/huber.hpp"
#include "json.hpp"

namespace coastal {

double huber_loss(const InundationMap& pred, const InundationMap& target, const HuberConfig& cfg) {
  if (cfg.theta < 0) throw ConfigError("huber theta must be >= 0");
  const int H = target.depth.height();
  const int W = target.depth.width();
  if (!pred.depth.same_shape(H, W) || !target.mask.same_shape(H, W)) {
    throw ConsistencyError("huber_loss: prediction and target shapes differ");
  }
  if (pred.mask.same_shape(H, W) && pred.mask.cells() != target.mask.cells()) {
    throw ConsistencyError("huber_loss: prediction and target masks differ");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < target.depth.size(); ++k) {
    if (!target.mask.cells()[k]) continue;
    const double d = static_cast<double>(pred.depth.cells()[k]) - target.depth.cells()[k];
    sum += huber(d, cfg.theta);
    ++n;
  }
  if (n == 0) throw ConsistencyError("huber_loss: empty mask");
  return sum / static_cast<double>(n);
}

double MetricsReport::delta_gt(double delta) const {
  for (const auto& d : delta_exceed) {
    if (d.delta == delta) return d.stat.mean;
  }
  throw ConfigError("no exceedance fraction recorded for delta " + std::to_string(delta));
}

std::vector<double> default_deltas() { return {0.5, 0.1}; }

namespace {

class Accumulator {
 public:
  void push(double v) { values_.push_back(v); }
  MetricStat finish() const {
    MetricStat s;
    s.count = values_.size();
    if (values_.empty()) {
      s.mean = std::nan("");
      s.std = std::nan("");
      return s;
    }
    double sum = 0.0;
    for (double v : values_) sum += v;
    s.mean = sum / static_cast<double>(values_.size());
    double ss = 0.0;
    for (double v : values_) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values_.size()));
    return s;
  }

 private:
  std::vector<double> values_;
};

}  // namespace

MetricsReport compute_metrics(const std::vector<DepthVector>& preds,
                              const std::vector<DepthVector>& targets,
                              const std::vector<double>& deltas) {
  if (preds.size() != targets.size()) {
    throw ConsistencyError("compute_metrics: " + std::to_string(preds.size()) + " predictions vs " +
                           std::to_string(targets.size()) + " targets");
  }
  if (targets.empty()) throw ConsistencyError("compute_metrics: no samples");
  const std::size_t dy = targets.front().size();
  if (dy == 0) throw ConsistencyError("compute_metrics: empty depth vectors");

  MetricsReport report;
  report.n_samples = targets.size();
  Accumulator amae, armse, artae, r2, acc0, acc0_lit;
  std::vector<Accumulator> exceed(deltas.size());

  for (std::size_t k = 0; k < targets.size(); ++k) {
    const DepthVector& y = targets[k];
    const DepthVector& p = preds[k];
    if (y.size() != dy || p.size() != dy) {
      throw ConsistencyError("compute_metrics: sample " + std::to_string(k) + " has wrong length");
    }
    double abs_sum = 0.0, sq_sum = 0.0, y_abs = 0.0, y_mean = 0.0;
    std::size_t zeros = 0, dry_hits = 0;
    std::vector<std::size_t> over(deltas.size(), 0);
    for (std::size_t i = 0; i < dy; ++i) {
      if (y[i] < 0) throw ConsistencyError("compute_metrics: negative target depth");
      const double e = static_cast<double>(y[i]) - static_cast<double>(p[i]);
      abs_sum += std::abs(e);
      sq_sum += e * e;
      y_abs += std::abs(static_cast<double>(y[i]));
      y_mean += y[i];
      for (std::size_t d = 0; d < deltas.size(); ++d) {
        if (std::abs(e) > deltas[d]) ++over[d];
      }
      if (y[i] == 0) {
        ++zeros;
        if (std::abs(static_cast<double>(p[i])) <= kDryTolerance) ++dry_hits;
      }
    }
    const double n = static_cast<double>(dy);
    y_mean /= n;
    double sst = 0.0;
    for (std::size_t i = 0; i < dy; ++i) sst += (y[i] - y_mean) * (y[i] - y_mean);

    amae.push(abs_sum / n);
    armse.push(std::sqrt(sq_sum / n));
    for (std::size_t d = 0; d < deltas.size(); ++d) exceed[d].push(static_cast<double>(over[d]) / n);
    acc0_lit.push(static_cast<double>(zeros) / n);
    const std::string tag = "sample " + std::to_string(k) + ": ";
    if (y_abs > 0) {
      artae.push(abs_sum / y_abs);
    } else {
      report.warnings.push_back(tag + "all-zero target, ARTAE term skipped");
    }
    if (sst > 0) {
      r2.push(1.0 - sq_sum / sst);
    } else {
      report.warnings.push_back(tag + "constant target, R2 term skipped");
    }
    if (zeros > 0) {
      acc0.push(static_cast<double>(dry_hits) / static_cast<double>(zeros));
    } else {
      report.warnings.push_back(tag + "no dry locations, Acc[0] term skipped");
    }
  }
  report.amae = amae.finish();
  report.armse = armse.finish();
  report.artae = artae.finish();
  report.r2 = r2.finish();
  report.acc0 = acc0.finish();
  report.acc0_literal = acc0_lit.finish();
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    report.delta_exceed.push_back(DeltaExceed{deltas[d], exceed[d].finish()});
  }
  return report;
}

std::string delta_key(double delta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "delta_gt_%g", delta);
  std::string key(buf);
  for (char& c : key) {
    if (c == '.' || c == '-' || c == '+') c = '_';
  }
  return key;
}

std::string metrics_to_json(const MetricsReport& r, int indent) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json out, spread;
  auto put = [&](const std::string& key, const MetricStat& s) {
    out[key] = num(s.mean);
    spread[key] = num(s.std);
  };
  put("amae", r.amae);
  put("armse", r.armse);
  put("artae", r.artae);
  for (const auto& d : r.delta_exceed) put(delta_key(d.delta), d.stat);
  put("r2", r.r2);
  put("acc0", r.acc0);
  put("acc0_literal", r.acc0_literal);
  out["n_samples"] = r.n_samples;
  out["std"] = spread;
  out["warnings"] = r.warnings;
  return out.dump(indent);
}

}  // namespace coastal
