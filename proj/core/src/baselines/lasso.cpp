#include <algorithm>
#include <cmath>
#include <limits>

#include "coastal/baselines.hpp"
#include "coastal/errors.hpp"

namespace coastal::baselines {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

/// Centered Gram form of one design: slopes only, intercept via means.
struct Gram {
  Matrix G;        ///< Zc^T Zc / n
  Vector z_mean;   ///< column means of the slope columns
  Eigen::Index n = 0;
};

/// Slope columns are every column except a leading constant one.
Gram make_gram(const Matrix& Z) {
  Gram g;
  g.n = Z.rows();
  const Matrix S = Z.rightCols(Z.cols() - 1);
  g.z_mean = S.colwise().mean().transpose();
  const Matrix Sc = S.rowwise() - g.z_mean.transpose();
  g.G = Sc.transpose() * Sc / static_cast<double>(g.n);
  return g;
}

Matrix centered_cross(const Matrix& Z, const Vector& z_mean, const Matrix& Y) {
  const Matrix S = Z.rightCols(Z.cols() - 1);
  const Matrix Sc = S.rowwise() - z_mean.transpose();
  const Matrix Yc = Y.rowwise() - Y.colwise().mean();
  return Sc.transpose() * Yc / static_cast<double>(Z.rows());
}

struct CdResult {
  int iterations = 0;
  double gap = 0.0;
  bool converged = false;
};

/// Minimizes 1/2 b^T G b - c^T b + lambda |b|_1 in place; yy = |yc|^2 / n.
CdResult coordinate_descent(const Matrix& G, const Vector& c, double yy, double lambda, double tol,
                            int max_iter, Vector& beta) {
  const Eigen::Index p = c.size();
  Vector q = G * beta;
  CdResult res;
  const double gap_tol = tol * yy;
  for (int it = 1; it <= max_iter; ++it) {
    double max_step = 0.0, max_beta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = G(j, j);
      if (gjj <= 0.0) {
        beta[j] = 0.0;
        continue;
      }
      const double old = beta[j];
      const double rho = c[j] - (q[j] - gjj * old);
      const double nb = soft_threshold(rho, lambda) / gjj;
      if (nb != old) {
        q += G.col(j) * (nb - old);
        beta[j] = nb;
      }
      max_step = std::max(max_step, std::abs(nb - old));
      max_beta = std::max(max_beta, std::abs(nb));
    }
    res.iterations = it;
    if (max_beta == 0.0 || max_step <= tol * max_beta) {
      if (lambda <= 0.0) {
        res.gap = 0.0;
        res.converged = true;
        return res;
      }
      // Duality gap in units of the per-sample objective.
      const double r2 = std::max(yy - 2.0 * beta.dot(c) + beta.dot(q), 0.0);
      const double dual_norm = (c - q).cwiseAbs().maxCoeff();
      double gap;
      double scale = 1.0;
      if (dual_norm > lambda) {
        scale = lambda / dual_norm;
        gap = 0.5 * (r2 + r2 * scale * scale);
      } else {
        gap = r2;
      }
      gap += lambda * beta.cwiseAbs().sum() - scale * (yy - beta.dot(c));
      res.gap = gap;
      if (gap <= gap_tol) {
        res.converged = true;
        return res;
      }
    }
  }
  return res;
}

}  // namespace

LassoPath lasso_coordinate_descent(const Matrix& Z, const Vector& y, double lambda, double tol, int max_iter) {
  if (lambda < 0) throw ConfigError("lasso lambda must be >= 0");
  if (Z.rows() != y.size()) throw ConsistencyError("lasso: design and target lengths differ");
  if (Z.rows() < 1 || Z.cols() < 1) throw ConfigError("lasso: empty design");
  const Gram g = make_gram(Z);
  const Matrix Y = y;
  const Vector c = centered_cross(Z, g.z_mean, Y).col(0);
  const double ymean = y.mean();
  const double yy = (y.array() - ymean).square().sum() / static_cast<double>(Z.rows());
  Vector beta = Vector::Zero(Z.cols() - 1);
  const CdResult r = coordinate_descent(g.G, c, yy, lambda, tol, max_iter, beta);
  LassoPath out;
  out.coef.resize(Z.cols());
  out.coef[0] = ymean - g.z_mean.dot(beta);
  out.coef.tail(beta.size()) = beta;
  out.iterations = r.iterations;
  out.gap = r.gap;
  out.converged = r.converged;
  return out;
}

double lasso_lambda_max(const Matrix& Z, const Matrix& Y) {
  const Gram g = make_gram(Z);
  const Matrix C = centered_cross(Z, g.z_mean, Y);
  return C.size() == 0 ? 0.0 : C.cwiseAbs().maxCoeff();
}

namespace {

/// Fits every output column at one lambda; returns (P x d_y) coefficients.
Matrix fit_all(const Matrix& Z, const Matrix& Y, double lambda, double tol, int max_iter, Matrix* warm,
               FitDiagnostics* diag) {
  const Gram g = make_gram(Z);
  const Matrix C = centered_cross(Z, g.z_mean, Y);
  const Vector ymean = Y.colwise().mean().transpose();
  Matrix coef(Z.cols(), Y.cols());
  int worst_iter = 0;
  double worst_gap = 0.0;
  std::size_t failures = 0;
  for (Eigen::Index k = 0; k < Y.cols(); ++k) {
    const double yy = (Y.col(k).array() - ymean[k]).square().sum() / static_cast<double>(Z.rows());
    Vector beta = warm ? Vector(warm->col(k)) : Vector::Zero(Z.cols() - 1);
    const CdResult r = coordinate_descent(g.G, C.col(k), yy, lambda, tol, max_iter, beta);
    if (warm) warm->col(k) = beta;
    coef(0, k) = ymean[k] - g.z_mean.dot(beta);
    coef.col(k).tail(beta.size()) = beta;
    worst_iter = std::max(worst_iter, r.iterations);
    if (!r.converged) {
      ++failures;
      worst_gap = std::max(worst_gap, r.gap);
    }
  }
  if (diag) {
    diag->values["max_iterations_used"] = worst_iter;
    if (failures > 0) {
      diag->warnings.push_back(std::to_string(failures) + " outputs did not converge within " +
                               std::to_string(max_iter) + " sweeps (largest final gap " +
                               std::to_string(worst_gap) + ")");
    }
  }
  return coef;
}

}  // namespace

LinearModel fit_lasso_poly(const Matrix& X, const Matrix& Y, const LassoOptions& opts) {
  if (X.rows() != Y.rows()) throw ConsistencyError("lasso: X and Y row counts differ");
  if (X.rows() < 2) throw ConfigError("lasso needs at least 2 samples");
  const Matrix Z = poly_expand_rows(X);
  FitDiagnostics diag;
  double lambda = opts.lambda;
  if (lambda < 0) {
    const Eigen::Index n = X.rows();
    const int folds = static_cast<int>(std::min<Eigen::Index>(opts.cv_folds, n));
    if (folds < 2) throw ConfigError("lasso cross-validation needs at least 2 folds");
    const double lmax = std::max(lasso_lambda_max(Z, Y), 1e-12);
    std::vector<double> grid;
    for (int k = 0; k < opts.cv_grid; ++k) {
      const double t = opts.cv_grid == 1 ? 0.0 : static_cast<double>(k) / (opts.cv_grid - 1);
      grid.push_back(lmax * std::pow(opts.cv_ratio, t));
    }
    std::vector<double> mse(grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
      const Eigen::Index lo = n * f / folds;
      const Eigen::Index hi = n * (f + 1) / folds;
      Matrix Ztr(n - (hi - lo), Z.cols()), Ytr(n - (hi - lo), Y.cols());
      Matrix Zte(hi - lo, Z.cols()), Yte(hi - lo, Y.cols());
      for (Eigen::Index r = 0, a = 0, b = 0; r < n; ++r) {
        if (r >= lo && r < hi) {
          Zte.row(b) = Z.row(r);
          Yte.row(b++) = Y.row(r);
        } else {
          Ztr.row(a) = Z.row(r);
          Ytr.row(a++) = Y.row(r);
        }
      }
      Matrix warm = Matrix::Zero(Z.cols() - 1, Y.cols());
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const Matrix coef = fit_all(Ztr, Ytr, grid[g], opts.tol, opts.max_iter, &warm, nullptr);
        mse[g] += (Zte * coef - Yte).squaredNorm() / static_cast<double>(Y.size());
      }
    }
    const auto best = std::min_element(mse.begin(), mse.end()) - mse.begin();
    lambda = grid[static_cast<std::size_t>(best)];
    diag.values["cv_mse"] = mse[static_cast<std::size_t>(best)];
    diag.values["lambda_max"] = lmax;
    diag.values["cv_folds"] = folds;
  }
  Matrix coef = fit_all(Z, Y, lambda, opts.tol, opts.max_iter, nullptr, &diag);
  diag.values["lambda"] = lambda;
  LinearModel m(std::move(coef), true);
  m.diagnostics = std::move(diag);
  return m;
}

}  // namespace coastal::baselines
