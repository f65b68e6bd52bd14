#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coastal/blob_store.hpp"
#include "coastal/grid.hpp"
#include "coastal/scenario.hpp"

namespace coastal::baselines {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rows are scenarios as 0/1 values.
Matrix scenario_matrix(const std::vector<ProtectionScenario>& scenarios);
Vector scenario_vector(const ProtectionScenario& scenario);
/// Rows are samples.
Matrix depth_matrix(const std::vector<DepthVector>& depths);

DepthVector clip_negative(const DepthVector& pred);
DepthVector clip_negative(const Vector& pred);

/// 1 + d + d(d-1)/2.
std::size_t poly_feature_count(std::size_t d_x);
/// [1, x_1..x_d, x_i x_j for i < j], pairs in lexicographic order.
Vector poly_expand(const Vector& x);
Vector poly_expand(const ProtectionScenario& x);
Matrix poly_expand_rows(const Matrix& X);

struct FitDiagnostics {
  std::map<std::string, double> values;
  std::vector<std::string> warnings;
};

/// Flat parameter export used for persistence.
struct Artifacts {
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> strings;
  std::vector<BlobEntry> tensors;

  const BlobEntry& tensor(const std::string& name) const;
  double scalar(const std::string& name) const;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual std::string_view method() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  /// Unclipped prediction.
  virtual Vector predict_raw(const Vector& x) const = 0;
  virtual Artifacts export_artifacts() const = 0;

  Matrix predict_raw(const Matrix& X) const;
  /// Prediction with negative depths replaced by zero.
  DepthVector predict(const ProtectionScenario& x) const;

  FitDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------

/// 0 where the location's segment is protected, otherwise the mean depth.
class NaivePredictor final : public Model {
 public:
  /// `location_segment[i]` is the bit index governing output i. The mean is a
  /// single scalar over all entries of Y unless `per_location`.
  static NaivePredictor fit(const Matrix& Y, std::vector<int> location_segment, std::size_t d_x,
                            bool per_location = false);
  static NaivePredictor from_artifacts(const Artifacts& a);

  std::string_view method() const override { return "naive"; }
  std::size_t input_dim() const override { return d_x_; }
  std::size_t output_dim() const override { return segment_.size(); }
  Vector predict_raw(const Vector& x) const override;
  Artifacts export_artifacts() const override;
  using Model::predict_raw;

  const Vector& means() const noexcept { return means_; }

 private:
  std::vector<int> segment_;
  Vector means_;
  std::size_t d_x_ = 0;
};

/// Bit index per location, taken from each location's segment_id.
std::vector<int> location_segments(const std::vector<CoastalLocation>& locations);

// ---------------------------------------------------------------------------

/// Affine map y = W^T [1; x]; `coef` is (1 + d) x d_y.
class LinearModel final : public Model {
 public:
  explicit LinearModel(Matrix coef, bool poly_inputs = false);
  static LinearModel from_artifacts(const Artifacts& a);

  std::string_view method() const override { return poly_ ? "lasso" : "linear"; }
  std::size_t input_dim() const override;
  std::size_t output_dim() const override { return static_cast<std::size_t>(coef_.cols()); }
  Vector predict_raw(const Vector& x) const override;
  Artifacts export_artifacts() const override;
  using Model::predict_raw;

  /// Row 0 holds intercepts.
  const Matrix& coef() const noexcept { return coef_; }
  bool poly_inputs() const noexcept { return poly_; }

 private:
  Matrix coef_;
  bool poly_ = false;
};

/// Least squares with intercept through a complete orthogonal decomposition;
/// rank-deficient designs get the minimum-norm solution.
LinearModel fit_linear(const Matrix& X, const Matrix& Y);

struct LassoOptions {
  double lambda = -1.0;  ///< negative selects by cross-validation
  double tol = 1e-4;
  int max_iter = 10000;
  int cv_folds = 5;
  int cv_grid = 20;
  double cv_ratio = 1e-3;  ///< smallest grid value relative to lambda_max
};

/// Per-output (1/2n)||y - b - Z beta||^2 + lambda ||beta||_1 on poly features
/// Z, intercept unpenalized, by cyclic coordinate descent.
LinearModel fit_lasso_poly(const Matrix& X, const Matrix& Y, const LassoOptions& opts = {});

/// Single-output solver. Column 0 of `Z` is the unpenalized intercept
/// feature (handled by centering); the rest are penalized. Returns
/// coefficients with the intercept first.
struct LassoPath {
  Vector coef;
  int iterations = 0;
  double gap = 0.0;
  bool converged = false;
};
LassoPath lasso_coordinate_descent(const Matrix& Z, const Vector& y, double lambda, double tol,
                                   int max_iter);

/// Smallest lambda that zeroes every slope, over all outputs; `Z` as above.
double lasso_lambda_max(const Matrix& Z, const Matrix& Y);

// ---------------------------------------------------------------------------

struct SvrOptions {
  double C = 5.0;
  double epsilon = 0.05;
  double tol = 1e-4;
  long long max_iter = 10'000'000;
};

/// One linear epsilon-insensitive regressor per output column.
class SvrModel final : public Model {
 public:
  SvrModel(Matrix weights, Vector bias);
  static SvrModel from_artifacts(const Artifacts& a);

  std::string_view method() const override { return "svr"; }
  std::size_t input_dim() const override { return static_cast<std::size_t>(weights_.rows()); }
  std::size_t output_dim() const override { return static_cast<std::size_t>(weights_.cols()); }
  Vector predict_raw(const Vector& x) const override;
  Artifacts export_artifacts() const override;
  using Model::predict_raw;

  /// d_x x d_y.
  const Matrix& weights() const noexcept { return weights_; }
  const Vector& bias() const noexcept { return bias_; }

 private:
  Matrix weights_;
  Vector bias_;
};

struct SvrSolution {
  Vector w;
  double b = 0.0;
  long long iterations = 0;
  bool converged = false;
};

/// Dual SMO solver for one output; `K` is the precomputed linear kernel X X^T.
SvrSolution solve_linear_svr(const Matrix& X, const Matrix& K, const Vector& y, const SvrOptions& opts);

SvrModel fit_svr_per_location(const Matrix& X, const Matrix& Y, const SvrOptions& opts = {});

// ---------------------------------------------------------------------------

struct PcaBasis {
  Vector mean;           ///< d_y
  Matrix components;     ///< q x d_y, orthonormal rows
  Vector explained;      ///< variance ratio per component
  std::size_t rank = 0;  ///< numerical rank of the centered data

  std::size_t q() const noexcept { return static_cast<std::size_t>(components.rows()); }
  Vector project(const Vector& y) const;
  Vector reconstruct(const Vector& z) const;
  Matrix project_rows(const Matrix& Y) const;
};

/// Smallest q whose cumulative explained variance reaches `threshold`,
/// capped at n - 1 and at the numerical rank.
PcaBasis fit_pca(const Matrix& Y, double threshold = 0.99);

struct KrigingOptions {
  double pca_threshold = 0.99;
  double length_min = 1e-2;
  double length_max = 1e2;
  int starts = 8;
  std::uint64_t seed = 0;
  double nugget_start = 1e-10;
  double nugget_max = 1e-6;
};

/// Universal Kriging with a linear trend and anisotropic squared-exponential
/// correlation exp(-1/2 sum_d ((x_d - x'_d) / l_d)^2).
class KrigingComponent {
 public:
  KrigingComponent() = default;
  /// Factorizes for fixed hyperparameters, trying `first_nugget` and then
  /// opts.nugget_start * 10^k up to opts.nugget_max; throws NumericError
  /// when the correlation matrix stays ill-conditioned.
  KrigingComponent(Matrix X, Vector y, Vector lengths, const KrigingOptions& opts,
                   double first_nugget = 0.0);

  double predict(const Vector& x) const;
  /// Concentrated log-likelihood at the fitted hyperparameters.
  double log_likelihood() const noexcept { return loglik_; }

  const Vector& lengths() const noexcept { return lengths_; }
  const Vector& trend() const noexcept { return beta_; }
  double variance() const noexcept { return sigma2_; }
  double nugget() const noexcept { return nugget_; }
  const Matrix& inputs() const noexcept { return X_; }
  const Vector& targets() const noexcept { return y_; }

 private:
  Matrix X_;
  Vector y_;
  Vector lengths_;
  Vector beta_;
  Vector alpha_;  ///< R^-1 (y - F beta)
  double sigma2_ = 0.0;
  double nugget_ = 0.0;
  double loglik_ = 0.0;
};

/// Maximizes the concentrated likelihood over log length-scales.
KrigingComponent fit_kriging_component(const Matrix& X, const Vector& y, const KrigingOptions& opts);

double squared_exponential(const Vector& a, const Vector& b, const Vector& lengths);

class KrigingPcaModel final : public Model {
 public:
  KrigingPcaModel(PcaBasis basis, std::vector<KrigingComponent> components, std::size_t d_x);
  static KrigingPcaModel from_artifacts(const Artifacts& a);

  std::string_view method() const override { return "kriging"; }
  std::size_t input_dim() const override { return d_x_; }
  std::size_t output_dim() const override { return static_cast<std::size_t>(basis_.mean.size()); }
  Vector predict_raw(const Vector& x) const override;
  Artifacts export_artifacts() const override;
  using Model::predict_raw;

  const PcaBasis& basis() const noexcept { return basis_; }
  const std::vector<KrigingComponent>& components() const noexcept { return components_; }

 private:
  PcaBasis basis_;
  std::vector<KrigingComponent> components_;
  std::size_t d_x_ = 0;
};

KrigingPcaModel fit_kriging_pca(const Matrix& X, const Matrix& Y, const KrigingOptions& opts = {});

// ---------------------------------------------------------------------------

/// JSON manifest plus float32 blobs; see write_blob_bundle.
void save_model(const Model& model, const std::filesystem::path& dir);
std::unique_ptr<Model> load_model(const std::filesystem::path& dir);

}  // namespace coastal::baselines
