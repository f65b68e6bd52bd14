#include <algorithm>

#include "coastal/baselines.hpp"
#include "coastal/errors.hpp"

namespace coastal::baselines {

Matrix scenario_matrix(const std::vector<ProtectionScenario>& scenarios) {
  if (scenarios.empty()) return Matrix(0, 0);
  const std::size_t d = scenarios.front().size();
  Matrix X(static_cast<Eigen::Index>(scenarios.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < scenarios.size(); ++r) {
    if (scenarios[r].size() != d) throw ConsistencyError("scenarios differ in length");
    for (std::size_t c = 0; c < d; ++c) {
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = scenarios[r][c] ? 1.0 : 0.0;
    }
  }
  return X;
}

Vector scenario_vector(const ProtectionScenario& s) {
  Vector x(static_cast<Eigen::Index>(s.size()));
  for (std::size_t c = 0; c < s.size(); ++c) x[static_cast<Eigen::Index>(c)] = s[c] ? 1.0 : 0.0;
  return x;
}

Matrix depth_matrix(const std::vector<DepthVector>& depths) {
  if (depths.empty()) return Matrix(0, 0);
  const std::size_t d = depths.front().size();
  Matrix Y(static_cast<Eigen::Index>(depths.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < depths.size(); ++r) {
    if (depths[r].size() != d) throw ConsistencyError("depth vectors differ in length");
    for (std::size_t c = 0; c < d; ++c) {
      Y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = depths[r][c];
    }
  }
  return Y;
}

DepthVector clip_negative(const DepthVector& pred) {
  DepthVector out(pred);
  for (float& v : out) v = std::max(v, 0.0f);
  return out;
}

DepthVector clip_negative(const Vector& pred) {
  DepthVector out(static_cast<std::size_t>(pred.size()));
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    out[static_cast<std::size_t>(k)] = static_cast<float>(std::max(pred[k], 0.0));
  }
  return out;
}

std::size_t poly_feature_count(std::size_t d_x) { return 1 + d_x + d_x * (d_x - 1) / 2; }

Vector poly_expand(const Vector& x) {
  const Eigen::Index d = x.size();
  Vector z(static_cast<Eigen::Index>(poly_feature_count(static_cast<std::size_t>(d))));
  Eigen::Index k = 0;
  z[k++] = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) z[k++] = x[i];
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) z[k++] = x[i] * x[j];
  }
  return z;
}

Vector poly_expand(const ProtectionScenario& x) { return poly_expand(scenario_vector(x)); }

Matrix poly_expand_rows(const Matrix& X) {
  Matrix Z(X.rows(), static_cast<Eigen::Index>(poly_feature_count(static_cast<std::size_t>(X.cols()))));
  for (Eigen::Index r = 0; r < X.rows(); ++r) Z.row(r) = poly_expand(Vector(X.row(r).transpose())).transpose();
  return Z;
}

const BlobEntry& Artifacts::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw LoadError("baseline artifact has no tensor '" + name + "'");
}

double Artifacts::scalar(const std::string& name) const {
  auto it = scalars.find(name);
  if (it == scalars.end()) throw LoadError("baseline artifact has no value '" + name + "'");
  return it->second;
}

Matrix Model::predict_raw(const Matrix& X) const {
  Matrix out(X.rows(), static_cast<Eigen::Index>(output_dim()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) out.row(r) = predict_raw(Vector(X.row(r).transpose())).transpose();
  return out;
}

DepthVector Model::predict(const ProtectionScenario& x) const {
  if (x.size() != input_dim()) {
    throw ConsistencyError("scenario has " + std::to_string(x.size()) + " bits, model expects " +
                           std::to_string(input_dim()));
  }
  return clip_negative(predict_raw(scenario_vector(x)));
}

std::vector<int> location_segments(const std::vector<CoastalLocation>& locations) {
  std::vector<CoastalLocation> sorted(locations);
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::vector<int> out;
  out.reserve(sorted.size());
  for (const auto& l : sorted) out.push_back(l.segment_id);
  return out;
}

NaivePredictor NaivePredictor::fit(const Matrix& Y, std::vector<int> location_segment, std::size_t d_x,
                                   bool per_location) {
  if (Y.rows() < 1) throw ConfigError("naive predictor needs at least one target");
  if (static_cast<std::size_t>(Y.cols()) != location_segment.size()) {
    throw ConsistencyError("naive predictor: segment list does not match d_y");
  }
  for (int s : location_segment) {
    if (s < 0 || static_cast<std::size_t>(s) >= d_x) throw ConsistencyError("segment index outside the scenario");
  }
  NaivePredictor m;
  m.segment_ = std::move(location_segment);
  m.d_x_ = d_x;
  if (per_location) {
    m.means_ = Y.colwise().mean().transpose();
  } else {
    m.means_ = Vector::Constant(Y.cols(), Y.mean());
  }
  m.diagnostics.values["per_location"] = per_location ? 1.0 : 0.0;
  m.diagnostics.values["global_mean"] = Y.mean();
  return m;
}

Vector NaivePredictor::predict_raw(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != d_x_) throw ConsistencyError("naive predictor: wrong input length");
  Vector out(means_.size());
  for (Eigen::Index i = 0; i < means_.size(); ++i) {
    out[i] = x[segment_[static_cast<std::size_t>(i)]] > 0.5 ? 0.0 : means_[i];
  }
  return out;
}

}  // namespace coastal::baselines
