#include <algorithm>

#include "coastal/baselines.hpp"
#include "coastal/errors.hpp"

namespace coastal::baselines {

Vector PcaBasis::project(const Vector& y) const {
  if (y.size() != mean.size()) throw ConsistencyError("pca: wrong vector length");
  return components * (y - mean);
}

Vector PcaBasis::reconstruct(const Vector& z) const {
  if (z.size() != components.rows()) throw ConsistencyError("pca: wrong latent length");
  return mean + components.transpose() * z;
}

Matrix PcaBasis::project_rows(const Matrix& Y) const {
  return (Y.rowwise() - mean.transpose()) * components.transpose();
}

PcaBasis fit_pca(const Matrix& Y, double threshold) {
  if (Y.rows() < 2) throw ConfigError("pca needs at least 2 samples");
  if (!(threshold > 0 && threshold <= 1)) throw ConfigError("pca threshold must lie in (0, 1]");
  PcaBasis b;
  b.mean = Y.colwise().mean().transpose();
  const Matrix Yc = Y.rowwise() - b.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(Yc, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s[k] > 1e-12 * smax && s[k] > 0) ++rank;
  }
  b.rank = rank;
  const double total = s.head(static_cast<Eigen::Index>(rank)).squaredNorm();
  std::size_t q = 0;
  double cum = 0.0;
  while (q < rank) {
    cum += s[static_cast<Eigen::Index>(q)] * s[static_cast<Eigen::Index>(q)];
    ++q;
    if (cum >= threshold * total * (1.0 - 1e-12)) break;
  }
  q = std::min<std::size_t>(q, static_cast<std::size_t>(Y.rows() - 1));
  const auto qi = static_cast<Eigen::Index>(q);
  b.components = svd.matrixV().leftCols(qi).transpose();
  b.explained.resize(qi);
  for (Eigen::Index k = 0; k < qi; ++k) b.explained[k] = total > 0 ? s[k] * s[k] / total : 0.0;
  return b;
}

}  // namespace coastal::baselines
