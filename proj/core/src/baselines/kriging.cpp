#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "coastal/baselines.hpp"
#include "coastal/errors.hpp"

namespace coastal::baselines {

namespace {

constexpr double kMinRcond = 1e-12;
constexpr double kVarianceFloor = 1e-300;

Matrix trend_design(const Matrix& X) {
  Matrix F(X.rows(), X.cols() + 1);
  F.col(0).setOnes();
  F.rightCols(X.cols()) = X;
  return F;
}

}  // namespace

double squared_exponential(const Vector& a, const Vector& b, const Vector& lengths) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double z = (a[d] - b[d]) / lengths[d];
    s += z * z;
  }
  return std::exp(-0.5 * s);
}

KrigingComponent::KrigingComponent(Matrix X, Vector y, Vector lengths, const KrigingOptions& opts,
                                   double first_nugget)
    : X_(std::move(X)), y_(std::move(y)), lengths_(std::move(lengths)) {
  const Eigen::Index n = X_.rows();
  if (n < 1 || y_.size() != n) throw ConsistencyError("kriging: inputs and targets differ in count");
  if (lengths_.size() != X_.cols()) throw ConsistencyError("kriging: one length-scale per input dimension");
  for (Eigen::Index d = 0; d < lengths_.size(); ++d) {
    if (!(lengths_[d] > 0) || !std::isfinite(lengths_[d])) throw ConfigError("kriging length-scales must be > 0");
  }
  Matrix R(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    R(a, a) = 1.0;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      R(a, b) = R(b, a) = squared_exponential(X_.row(a).transpose(), X_.row(b).transpose(), lengths_);
    }
  }
  std::vector<double> nuggets{first_nugget};
  for (double t = opts.nugget_start; t <= opts.nugget_max * (1 + 1e-9); t *= 10) {
    if (t > first_nugget) nuggets.push_back(t);
  }
  Eigen::LLT<Matrix> llt;
  bool ok = false;
  for (double t : nuggets) {
    llt.compute(R + t * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success && llt.rcond() >= kMinRcond) {
      nugget_ = t;
      ok = true;
      break;
    }
  }
  if (!ok) {
    throw NumericError("kriging correlation matrix is ill-conditioned even with nugget " +
                       std::to_string(opts.nugget_max));
  }
  const Matrix L = llt.matrixL();
  const Matrix Ft = L.triangularView<Eigen::Lower>().solve(trend_design(X_));
  const Vector yt = L.triangularView<Eigen::Lower>().solve(y_);
  beta_ = Ft.completeOrthogonalDecomposition().solve(yt);
  const Vector rt = yt - Ft * beta_;
  sigma2_ = std::max(rt.squaredNorm() / static_cast<double>(n), kVarianceFloor);
  alpha_ = L.transpose().triangularView<Eigen::Upper>().solve(rt);
  double logdet = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) logdet += 2.0 * std::log(L(k, k));
  loglik_ = -0.5 * static_cast<double>(n) * std::log(sigma2_) - 0.5 * logdet;
  if (!std::isfinite(loglik_)) throw NumericError("kriging likelihood is not finite");
}

double KrigingComponent::predict(const Vector& x) const {
  if (x.size() != X_.cols()) throw ConsistencyError("kriging: wrong input length");
  double out = beta_[0] + beta_.tail(x.size()).dot(x);
  for (Eigen::Index a = 0; a < X_.rows(); ++a) {
    out += alpha_[a] * squared_exponential(X_.row(a).transpose(), x, lengths_);
  }
  return out;
}

KrigingComponent fit_kriging_component(const Matrix& X, const Vector& y, const KrigingOptions& opts) {
  if (!(opts.length_min > 0 && opts.length_max >= opts.length_min)) {
    throw ConfigError("kriging length-scale bounds must satisfy 0 < min <= max");
  }
  if (opts.starts < 1) throw ConfigError("kriging needs at least one start");
  const Eigen::Index d = X.cols();
  const double lo = std::log(opts.length_min);
  const double hi = std::log(opts.length_max);
  auto evaluate = [&](const Vector& logl) {
    try {
      return KrigingComponent(X, y, logl.array().exp().matrix(), opts).log_likelihood();
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  Vector best_x = Vector::Zero(d);
  double best_f = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < opts.starts; ++s) {
    Vector x(d);
    for (Eigen::Index k = 0; k < d; ++k) x[k] = s == 0 ? std::clamp(0.0, lo, hi) : uni(rng);
    double f = evaluate(x);
    double step = 1.0;
    int evals = 1;
    const int budget = 400 * static_cast<int>(std::max<Eigen::Index>(d, 1));
    while (step > 1e-3 && evals < budget) {
      bool moved = false;
      for (Eigen::Index k = 0; k < d && !moved; ++k) {
        for (double dir : {1.0, -1.0}) {
          Vector c = x;
          c[k] = std::clamp(x[k] + dir * step, lo, hi);
          if (c[k] == x[k]) continue;
          const double fc = evaluate(c);
          ++evals;
          if (fc > f + 1e-12) {
            x = c;
            f = fc;
            moved = true;
            break;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  if (!std::isfinite(best_f)) throw NumericError("kriging likelihood search found no valid length-scales");
  // Lengths are stored as float32; fitting with the rounded values keeps a
  // reloaded model identical.
  const Vector lengths = best_x.array().exp().matrix().cast<float>().cast<double>();
  return KrigingComponent(X, y, lengths, opts);
}

KrigingPcaModel::KrigingPcaModel(PcaBasis basis, std::vector<KrigingComponent> components, std::size_t d_x)
    : basis_(std::move(basis)), components_(std::move(components)), d_x_(d_x) {
  if (components_.size() != basis_.q()) throw ConsistencyError("kriging: one component per PCA direction");
}

Vector KrigingPcaModel::predict_raw(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != d_x_) throw ConsistencyError("kriging: wrong input length");
  Vector z(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t k = 0; k < components_.size(); ++k) z[static_cast<Eigen::Index>(k)] = components_[k].predict(x);
  return basis_.reconstruct(z);
}

KrigingPcaModel fit_kriging_pca(const Matrix& X, const Matrix& Y, const KrigingOptions& opts) {
  if (X.rows() != Y.rows()) throw ConsistencyError("kriging: X and Y row counts differ");
  PcaBasis basis = fit_pca(Y, opts.pca_threshold);
  const Matrix Z = basis.project_rows(Y);
  std::vector<KrigingComponent> comps;
  double max_nugget = 0.0;
  for (Eigen::Index k = 0; k < Z.cols(); ++k) {
    KrigingOptions o = opts;
    o.seed = opts.seed + static_cast<std::uint64_t>(k);
    comps.push_back(fit_kriging_component(X, Z.col(k), o));
    max_nugget = std::max(max_nugget, comps.back().nugget());
  }
  const auto q = static_cast<double>(basis.q());
  KrigingPcaModel m(std::move(basis), std::move(comps), static_cast<std::size_t>(X.cols()));
  m.diagnostics.values["q"] = q;
  m.diagnostics.values["pca_threshold"] = opts.pca_threshold;
  m.diagnostics.values["max_nugget"] = max_nugget;
  if (max_nugget > 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "nugget %g added for conditioning", max_nugget);
    m.diagnostics.warnings.emplace_back(buf);
  }
  return m;
}

}  // namespace coastal::baselines
