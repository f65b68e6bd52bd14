#include <cmath>
#include <random>

#include "coastal/baselines.hpp"
#include "coastal/scenario.hpp"
#include "coastal/synth.hpp"
#include "coastal/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace coastal;
using namespace coastal::baselines;

namespace {

Matrix all_scenarios(int d) {
  Matrix X(1 << d, d);
  for (int r = 0; r < (1 << d); ++r)
    for (int c = 0; c < d; ++c) X(r, c) = (r >> c) & 1;
  return X;
}

Matrix with_intercept(const Matrix& X) {
  Matrix A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  return A;
}

// Normal equations, independent of the decomposition used by fit_linear.
Matrix normal_equations(const Matrix& X, const Matrix& Y) {
  const Matrix A = with_intercept(X);
  return (A.transpose() * A).ldlt().solve(A.transpose() * Y);
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("poly features") {
    CHECK(poly_feature_count(17) == 154);
    CHECK(poly_feature_count(3) == 7);
    const Vector z = poly_expand(parse_scenario("101"));
    REQUIRE(z.size() == 7);
    CHECK(z(0) == 1);
    CHECK(z(1) == 1);
    CHECK(z(2) == 0);
    CHECK(z(3) == 1);
    CHECK(z(4) == 0);  // x1 x2
    CHECK(z(5) == 1);  // x1 x3
    CHECK(z(6) == 0);  // x2 x3
    CHECK(poly_expand(parse_scenario("000")).sum() == 1);
  }

  TEST_CASE("clip negative") {
    CHECK(clip_negative(DepthVector{-0.2f, 0.3f}) == DepthVector{0.0f, 0.3f});
  }

  TEST_CASE("least squares agrees with the normal equations") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    const Matrix X = all_scenarios(4);
    Matrix Y(X.rows(), 3);
    for (Eigen::Index r = 0; r < Y.rows(); ++r)
      for (int c = 0; c < 3; ++c) Y(r, c) = n(rng);
    const LinearModel m = fit_linear(X, Y);
    CHECK((m.coef() - normal_equations(X, Y)).cwiseAbs().maxCoeff() < 1e-10);

    Matrix exact = with_intercept(X) * normal_equations(X, Y);
    const LinearModel e = fit_linear(X, exact);
    CHECK((e.predict_raw(X) - exact).cwiseAbs().maxCoeff() < 1e-8);

    const LinearModel flat = fit_linear(X, Matrix::Constant(X.rows(), 2, 1.5));
    CHECK(flat.coef().row(0).isApproxToConstant(1.5, 1e-12));
    CHECK(flat.coef().bottomRows(4).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("rank-deficient designs give the minimum-norm solution") {
    Matrix X(4, 2);
    X << 0, 0, 1, 1, 0, 0, 1, 1;  // identical columns
    Matrix Y(4, 1);
    Y << 0, 2, 0, 2;
    const LinearModel m = fit_linear(X, Y);
    CHECK(m.coef()(1, 0) == doctest::Approx(1.0));
    CHECK(m.coef()(2, 0) == doctest::Approx(1.0));
    CHECK((m.predict_raw(X) - Y).norm() < 1e-10);
  }

  TEST_CASE("interaction data defeats the linear model but not lasso-poly") {
    const Matrix X = all_scenarios(4);
    Matrix Y(X.rows(), 1);
    for (Eigen::Index r = 0; r < X.rows(); ++r) Y(r, 0) = 1.0 + 0.5 * X(r, 0) - 2.0 * X(r, 1) * X(r, 2);
    const double linear_res = (fit_linear(X, Y).predict_raw(X) - Y).cwiseAbs().maxCoeff();
    LassoOptions o;
    o.lambda = 1e-6;
    o.tol = 1e-10;
    const LinearModel lasso = fit_lasso_poly(X, Y, o);
    const double lasso_res = (lasso.predict_raw(X) - Y).cwiseAbs().maxCoeff();
    CHECK(linear_res > 0.1);
    CHECK(lasso_res < 1e-3);
    // Support: intercept, x1 and x2*x3 (feature 1 + 4 + index of (1,2) pair = 8).
    const Vector c = lasso.coef().col(0);
    for (Eigen::Index k = 1; k < c.size(); ++k) {
      if (k == 1 || k == 8) {
        CHECK(std::fabs(c(k)) > 0.4);
      } else {
        CHECK(std::fabs(c(k)) < 1e-3);
      }
    }
  }

  TEST_CASE("lasso at lambda 0 equals least squares on expanded features") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    const Matrix X = all_scenarios(4);
    Matrix Y(X.rows(), 2);
    for (Eigen::Index r = 0; r < Y.rows(); ++r)
      for (int c = 0; c < 2; ++c) Y(r, c) = n(rng);
    LassoOptions o;
    o.lambda = 0.0;
    o.tol = 1e-14;
    o.max_iter = 200000;
    const LinearModel lasso = fit_lasso_poly(X, Y, o);
    const Matrix Z = poly_expand_rows(X);
    const LinearModel ols = fit_linear(Z.rightCols(Z.cols() - 1), Y);
    CHECK((lasso.predict_raw(X) - ols.predict_raw(Matrix(Z.rightCols(Z.cols() - 1)))).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("large lambda leaves only the mean") {
    const Matrix X = all_scenarios(3);
    Matrix Y(X.rows(), 1);
    for (Eigen::Index r = 0; r < X.rows(); ++r) Y(r, 0) = X(r, 0) + 2 * X(r, 1) * X(r, 2);
    const Matrix Z = poly_expand_rows(X);
    LassoOptions o;
    o.lambda = 1.01 * lasso_lambda_max(Z, Y);
    const LinearModel m = fit_lasso_poly(X, Y, o);
    CHECK(m.coef().bottomRows(m.coef().rows() - 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.coef()(0, 0) == doctest::Approx(Y.mean()));
  }

  TEST_CASE("lasso solution satisfies the optimality conditions") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    Matrix Z(40, 6);
    Vector y(40);
    for (int r = 0; r < 40; ++r) {
      for (int c = 0; c < 6; ++c) Z(r, c) = n(rng);
      y(r) = 2 * Z(r, 0) - Z(r, 3) + 0.1 * n(rng);
    }
    const double lambda = 0.2;
    const LassoPath p = lasso_coordinate_descent(with_intercept(Z), y, lambda, 1e-12, 100000);
    CHECK(p.converged);
    const Vector beta = p.coef.tail(6);
    const Vector resid = y - Vector::Constant(40, p.coef(0)) - Z * beta;
    const Vector grad = Z.transpose() * resid / 40.0;
    for (int c = 0; c < 6; ++c) {
      if (beta(c) != 0.0) {
        CHECK(grad(c) == doctest::Approx(lambda * (beta(c) > 0 ? 1 : -1)).epsilon(1e-5));
      } else {
        CHECK(std::fabs(grad(c)) <= lambda + 1e-8);
      }
    }
    CHECK(std::fabs(resid.sum()) < 1e-8);
  }

  TEST_CASE("svr recovers an exact line and ignores constants inside the tube") {
    const Matrix X = all_scenarios(3);
    Matrix Y(X.rows(), 2);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      Y(r, 0) = 0.3 + 0.7 * X(r, 0) - 0.4 * X(r, 2);
      Y(r, 1) = 1.0;
    }
    SvrOptions o;
    o.C = 1000;
    o.epsilon = 0.0;
    o.tol = 1e-8;
    const SvrModel line = fit_svr_per_location(X, Y.leftCols(1), o);
    const LinearModel ls = fit_linear(X, Y.leftCols(1));
    CHECK((line.predict_raw(X) - ls.predict_raw(X)).cwiseAbs().maxCoeff() < 1e-3);

    const SvrModel flat = fit_svr_per_location(X, Y, SvrOptions{});
    CHECK(flat.output_dim() == 2);
    CHECK(flat.weights().col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::fabs(flat.bias()(1) - 1.0) <= 0.05 + 1e-9);
  }

  TEST_CASE("svr residuals respect the tube up to slack") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    const Matrix X = all_scenarios(4);
    Vector y(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) y(r) = X(r, 0) * X(r, 1) + 0.2 * u(rng);
    SvrOptions o;
    o.tol = 1e-10;
    const Matrix K = X * X.transpose();
    const SvrSolution s = solve_linear_svr(X, K, y, o);
    CHECK(s.converged);
    // Primal objective at the solution is not beaten by small perturbations of w and b.
    auto primal = [&](const Vector& w, double b) {
      double loss = 0;
      for (Eigen::Index r = 0; r < X.rows(); ++r) loss += std::max(0.0, std::fabs(y(r) - X.row(r).dot(w) - b) - o.epsilon);
      return 0.5 * w.squaredNorm() + o.C * loss;
    };
    const double best = primal(s.w, s.b);
    for (int t = 0; t < 50; ++t) {
      Vector w = s.w;
      for (Eigen::Index k = 0; k < w.size(); ++k) w(k) += 1e-3 * (u(rng) - 0.5);
      CHECK(primal(w, s.b + 1e-3 * (u(rng) - 0.5)) >= best - 1e-6);
    }
  }

  TEST_CASE("pca rank and reconstruction") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0, 1);
    Matrix U(30, 5), V(5, 40);
    for (auto* M : {&U, &V})
      for (Eigen::Index r = 0; r < M->rows(); ++r)
        for (Eigen::Index c = 0; c < M->cols(); ++c) (*M)(r, c) = n(rng);
    const Matrix Y = U * V;
    const PcaBasis p = fit_pca(Y, 0.99);
    CHECK(p.rank == 5);
    CHECK(p.q() <= 5);
    const PcaBasis full = fit_pca(Y, 1.0);
    CHECK(full.q() == 5);
    CHECK((full.components * full.components.transpose() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
    double err = 0;
    for (Eigen::Index r = 0; r < Y.rows(); ++r)
      err = std::max(err, (full.reconstruct(full.project(Y.row(r).transpose())) - Y.row(r).transpose()).cwiseAbs().maxCoeff());
    CHECK(err < 1e-8);

    // Known spectrum: five strong directions.
    Matrix S = Matrix::Zero(30, 40);
    for (int k = 0; k < 5; ++k) S += (10.0 - k) * U.col(k) * V.row(k);
    CHECK(fit_pca(S, 0.99).q() == 5);

    Matrix r1 = Vector::LinSpaced(10, 0, 1) * Vector::LinSpaced(6, 1, 2).transpose();
    CHECK(fit_pca(r1, 0.99).q() == 1);
  }

  TEST_CASE("squared exponential form") {
    Vector a(2), b(2), l(2);
    a << 0, 0;
    b << 1, 2;
    l << 1, 2;
    CHECK(squared_exponential(a, b, l) == doctest::Approx(std::exp(-0.5 * (1.0 + 1.0))));
    CHECK(squared_exponential(a, a, l) == 1.0);
  }

  TEST_CASE("kriging interpolates and absorbs linear signals in the trend") {
    const Matrix X = all_scenarios(4);
    Matrix Y(X.rows(), 5);
    for (Eigen::Index r = 0; r < X.rows(); ++r)
      for (int c = 0; c < 5; ++c) Y(r, c) = (c + 1) * (0.2 + X(r, 0) - 0.5 * X(r, 3));
    const KrigingPcaModel lin = fit_kriging_pca(X, Y);
    CHECK(lin.basis().q() == 1);
    const LinearModel ols = fit_linear(X, Y);
    CHECK((lin.predict_raw(X) - ols.predict_raw(X)).cwiseAbs().maxCoeff() < 1e-4);
    Vector probe(4);
    probe << 0.5, 0.5, 0.5, 0.5;
    CHECK((lin.predict_raw(probe) - ols.predict_raw(probe)).cwiseAbs().maxCoeff() < 1e-4);

    Matrix Yi(X.rows(), 3);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      Yi(r, 0) = X(r, 0) * X(r, 1);
      Yi(r, 1) = std::sin(X(r, 2) + 2 * X(r, 3));
      Yi(r, 2) = X(r, 1) - X(r, 0) * X(r, 3);
    }
    const KrigingPcaModel m = fit_kriging_pca(X, Yi);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const Vector t = m.basis().reconstruct(m.basis().project(Yi.row(r).transpose()));
      REQUIRE((m.predict_raw(Vector(X.row(r).transpose())) - t).cwiseAbs().maxCoeff() < 1e-6);
    }
    for (const auto& c : m.components()) CHECK(c.inputs().rows() == X.rows());
  }

  TEST_CASE("naive predictor") {
    const std::vector<CoastalLocation> locs{{5, 0, 0, 1}, {2, 0, 0, 0}, {9, 0, 0, 1}};
    const auto seg = location_segments(locs);
    CHECK(seg == std::vector<int>{0, 1, 1});
    Matrix Y(2, 3);
    Y << 1, 2, 3, 3, 2, 1;
    const NaivePredictor p = NaivePredictor::fit(Y, seg, 2);
    const DepthVector out = p.predict(parse_scenario("01"));
    CHECK(out[0] == doctest::Approx(2.0));
    CHECK(out[1] == 0.0f);
    CHECK(out[2] == 0.0f);
    const NaivePredictor per = NaivePredictor::fit(Y, seg, 2, true);
    const DepthVector o2 = per.predict(parse_scenario("00"));
    CHECK(o2[0] == doctest::Approx(2.0));
    CHECK(o2[2] == doctest::Approx(2.0));
  }

  TEST_CASE("save and load keep predictions") {
    const Dataset d = make_synthetic_dataset(4, 30, 16, 16, 16, SynthOracleParams{0.0, 2.0, 1.0, 0.3, 3});
    std::vector<ProtectionScenario> xs;
    std::vector<DepthVector> ys;
    for (const auto& s : d.samples) {
      xs.push_back(s.scenario);
      ys.push_back(s.depths);
    }
    const Matrix X = scenario_matrix(xs), Y = depth_matrix(ys);
    std::vector<std::unique_ptr<Model>> models;
    models.push_back(std::make_unique<NaivePredictor>(NaivePredictor::fit(Y, location_segments(d.locations), 4)));
    models.push_back(std::make_unique<LinearModel>(fit_linear(X, Y)));
    LassoOptions lo;
    lo.lambda = 1e-3;
    models.push_back(std::make_unique<LinearModel>(fit_lasso_poly(X, Y, lo)));
    models.push_back(std::make_unique<SvrModel>(fit_svr_per_location(X, Y)));
    models.push_back(std::make_unique<KrigingPcaModel>(fit_kriging_pca(X, Y)));
    for (const auto& m : models) {
      fixtures::TempDir dir(std::string(m->method()));
      save_model(*m, dir.path());
      const auto back = load_model(dir.path());
      CHECK(back->method() == m->method());
      CHECK(back->input_dim() == 4);
      CHECK(back->output_dim() == 30);
      for (const auto& s : {parse_scenario("1010"), parse_scenario("0111")}) {
        const DepthVector a = m->predict(s), b = back->predict(s);
        for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(std::fabs(a[k] - b[k]) <= 1e-4f * (1.0f + std::fabs(a[k])));
      }
    }
  }
}
