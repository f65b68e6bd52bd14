#include <algorithm>
#include <cmath>
#include <limits>

#include "coastal/baselines.hpp"
#include "coastal/errors.hpp"

namespace coastal::baselines {

SvrModel::SvrModel(Matrix weights, Vector bias) : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.cols() != bias_.size()) throw ConsistencyError("svr: weight and bias counts differ");
}

Vector SvrModel::predict_raw(const Vector& x) const {
  if (x.size() != weights_.rows()) throw ConsistencyError("svr: wrong input length");
  return weights_.transpose() * x + bias_;
}

// Dual of epsilon-SVR over 2n variables (alpha, alpha*), sign s_t = +1 for the
// first n and -1 for the rest:
//   min 1/2 b^T Q b + p^T b,  Q_tu = s_t s_u K(t mod n, u mod n),
//   p = [eps - y; eps + y],  s^T b = 0,  0 <= b <= C.
// Working pairs use second-order selection.
SvrSolution solve_linear_svr(const Matrix& X, const Matrix& K, const Vector& y, const SvrOptions& opts) {
  const Eigen::Index n = X.rows();
  if (K.rows() != n || K.cols() != n || y.size() != n) throw ConsistencyError("svr: kernel size mismatch");
  if (!(opts.C > 0)) throw ConfigError("svr C must be > 0");
  if (opts.epsilon < 0) throw ConfigError("svr epsilon must be >= 0");
  constexpr double tau = 1e-12;
  const Eigen::Index l = 2 * n;
  const double C = opts.C;
  auto sign = [n](Eigen::Index t) { return t < n ? 1.0 : -1.0; };
  auto kidx = [n](Eigen::Index t) { return t < n ? t : t - n; };
  auto Q = [&](Eigen::Index t, Eigen::Index u) { return sign(t) * sign(u) * K(kidx(t), kidx(u)); };

  Vector alpha = Vector::Zero(l);
  Vector G(l);
  for (Eigen::Index t = 0; t < n; ++t) {
    G[t] = opts.epsilon - y[t];
    G[t + n] = opts.epsilon + y[t];
  }
  auto upper = [&](Eigen::Index t) { return alpha[t] >= C; };
  auto lower = [&](Eigen::Index t) { return alpha[t] <= 0.0; };

  SvrSolution sol;
  for (long long iter = 0; iter < opts.max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < l; ++t) {
      if (sign(t) > 0) {
        if (!upper(t) && -G[t] >= gmax) {
          gmax = -G[t];
          i = t;
        }
      } else if (!lower(t) && G[t] >= gmax) {
        gmax = G[t];
        i = t;
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < l; ++t) {
      double diff;
      double quad;
      if (sign(t) > 0) {
        if (lower(t)) continue;
        gmax2 = std::max(gmax2, G[t]);
        diff = gmax + G[t];
        if (i < 0 || diff <= 0) continue;
        quad = Q(i, i) + Q(t, t) - 2.0 * sign(i) * Q(i, t);
      } else {
        if (upper(t)) continue;
        gmax2 = std::max(gmax2, -G[t]);
        diff = gmax - G[t];
        if (i < 0 || diff <= 0) continue;
        quad = Q(i, i) + Q(t, t) + 2.0 * sign(i) * Q(i, t);
      }
      const double obj = -(diff * diff) / (quad > 0 ? quad : tau);
      if (obj <= best) {
        best = obj;
        j = t;
      }
    }
    sol.iterations = iter;
    if (gmax + gmax2 < opts.tol || i < 0 || j < 0) {
      sol.converged = true;
      break;
    }

    const double old_i = alpha[i], old_j = alpha[j];
    if (sign(i) != sign(j)) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (Eigen::Index t = 0; t < l; ++t) G[t] += Q(i, t) * di + Q(j, t) * dj;
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < l; ++t) {
    const double yg = sign(t) * G[t];
    if (upper(t)) {
      if (sign(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (sign(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / free_count : 0.5 * (ub + lb);
  const Vector coef = alpha.head(n) - alpha.tail(n);
  sol.w = X.transpose() * coef;
  sol.b = -rho;
  return sol;
}

SvrModel fit_svr_per_location(const Matrix& X, const Matrix& Y, const SvrOptions& opts) {
  if (X.rows() != Y.rows()) throw ConsistencyError("svr: X and Y row counts differ");
  if (X.rows() < 1) throw ConfigError("svr needs at least one sample");
  const Matrix K = X * X.transpose();
  Matrix W(X.cols(), Y.cols());
  Vector b(Y.cols());
  std::size_t unconverged = 0;
  long long max_iter_used = 0;
  for (Eigen::Index k = 0; k < Y.cols(); ++k) {
    const SvrSolution s = solve_linear_svr(X, K, Y.col(k), opts);
    W.col(k) = s.w;
    b[k] = s.b;
    if (!s.converged) ++unconverged;
    max_iter_used = std::max(max_iter_used, s.iterations);
  }
  SvrModel m(std::move(W), std::move(b));
  m.diagnostics.values["C"] = opts.C;
  m.diagnostics.values["epsilon"] = opts.epsilon;
  m.diagnostics.values["models"] = static_cast<double>(Y.cols());
  m.diagnostics.values["max_iterations_used"] = static_cast<double>(max_iter_used);
  if (unconverged > 0) {
    m.diagnostics.warnings.push_back(std::to_string(unconverged) + " locations hit the iteration limit");
  }
  return m;
}

}  // namespace coastal::baselines
