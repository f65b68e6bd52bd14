#include "coastal/baselines.hpp"
#include "coastal/errors.hpp"

namespace coastal::baselines {

LinearModel::LinearModel(Matrix coef, bool poly_inputs) : coef_(std::move(coef)), poly_(poly_inputs) {
  if (coef_.rows() < 1) throw ConfigError("linear model needs an intercept row");
}

std::size_t LinearModel::input_dim() const {
  const auto p = static_cast<std::size_t>(coef_.rows());
  if (!poly_) return p - 1;
  for (std::size_t d = 0;; ++d) {
    if (poly_feature_count(d) == p) return d;
    if (poly_feature_count(d) > p) throw ConsistencyError("coefficient rows are not a poly feature count");
  }
}

Vector LinearModel::predict_raw(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim()) throw ConsistencyError("linear model: wrong input length");
  if (poly_) return coef_.transpose() * poly_expand(x);
  Vector z(x.size() + 1);
  z[0] = 1.0;
  z.tail(x.size()) = x;
  return coef_.transpose() * z;
}

LinearModel fit_linear(const Matrix& X, const Matrix& Y) {
  if (X.rows() < 2) throw ConfigError("linear regression needs at least 2 samples");
  if (X.rows() != Y.rows()) throw ConsistencyError("linear regression: X and Y row counts differ");
  Matrix A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  LinearModel m(cod.solve(Y));
  m.diagnostics.values["rank"] = static_cast<double>(cod.rank());
  m.diagnostics.values["columns"] = static_cast<double>(A.cols());
  if (cod.rank() < A.cols()) {
    m.diagnostics.warnings.push_back("rank-deficient design (rank " + std::to_string(cod.rank()) + " of " +
                                     std::to_string(A.cols()) + "), minimum-norm solution used");
  }
  return m;
}

}  // namespace coastal::baselines
