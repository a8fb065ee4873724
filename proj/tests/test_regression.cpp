#include "oracles.hpp"

#include "oed/criteria.hpp"
#include "oed/error.hpp"
#include "oed/kernels.hpp"
#include "oed/regression.hpp"

#include <doctest.h>

#include <cmath>

using namespace oed;

TEST_SUITE("regression") {

TEST_CASE("ridge on the identity shrinks by 1 / (1 + lambda)") {
  Vector y(2);
  y << 1.0, 0.0;
  const FitModel m = ridge_fit(Matrix::Identity(2, 2), y, 1.0);
  CHECK(m.coefficients(0, 0) == doctest::Approx(0.5));
  CHECK(m.coefficients(1, 0) == 0.0);
}

TEST_CASE("minimum-norm interpolator for a single row") {
  Matrix x(1, 2);
  x << 1.0, 0.0;
  Vector y(1);
  y << 2.0;
  const FitModel m = ridge_fit(x, y, 0.0);
  CHECK(m.coefficients(0, 0) == doctest::Approx(2.0));
  CHECK(m.coefficients(1, 0) == 0.0);
}

TEST_CASE("ridge is continuous at lambda = 0") {
  Rng rng(60);
  const Matrix x = rng.normal_matrix(5, 8);
  const Vector y = rng.normal_vector(5);
  const Matrix w0 = ridge_fit(x, y, 0.0).coefficients;
  const Matrix wl = ridge_fit(x, y, 1e-6).coefficients;
  CHECK((wl - w0).norm() <= 1e-4 * w0.norm());
}

TEST_CASE("ridge solves the normal equations in both regimes") {
  Rng rng(61);
  for (Index n : {4, 9, 15}) {
    const Matrix x = rng.normal_matrix(n, 9);
    const Matrix y = rng.normal_matrix(n, 3);
    const double lambda = 0.7;
    const Matrix w = ridge_fit(x, y, lambda).coefficients;
    const Matrix lhs = (x.transpose() * x + lambda * Matrix::Identity(9, 9)) * w;
    const Matrix rhs = x.transpose() * y;
    CHECK((lhs - rhs).norm() <= 1e-7 * rhs.norm());
    const Matrix w0 = ridge_fit(x, y, 0.0).coefficients;
    CHECK((w0 - oracle::pinv(x) * y).norm() <= 1e-9 * w0.norm());
  }
}

TEST_CASE("minimum-norm fit interpolates and is the shortest interpolant") {
  Rng rng(62);
  const Matrix x = rng.normal_matrix(6, 10);
  const Vector y = rng.normal_vector(6);
  const Vector w = ridge_fit(x, y, 0.0).coefficients.col(0);
  CHECK((x * w - y).norm() <= 1e-8 * y.norm());
  Eigen::FullPivLU<Matrix> lu(x);
  const Matrix null = lu.kernel();
  for (Index c = 0; c < null.cols(); ++c) {
    const Vector other = w + 0.1 * null.col(c);
    CHECK((x * other - y).norm() <= 1e-8 * y.norm());
    CHECK(w.norm() <= other.norm());
  }
}

TEST_CASE("rank-deficient designs use the pseudoinverse") {
  Matrix x(3, 2);
  x << 1.0, 1.0, 2.0, 2.0, -1.0, -1.0;
  Vector y(3);
  y << 1.0, 2.0, -1.0;
  const Vector w = ridge_fit(x, y, 0.0).coefficients.col(0);
  CHECK(w(0) == doctest::Approx(0.5));
  CHECK(w(1) == doctest::Approx(0.5));
}

TEST_CASE("kernel ridge: scalar example") {
  Matrix k(1, 1);
  k << 1.0;
  Vector y(1);
  y << 3.0;
  const FitModel m = krr_fit(k, y, 1.0);
  CHECK(m.coefficients(0, 0) == doctest::Approx(1.5));
  CHECK(krr_predict(m, k)(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("kernel ridge interpolates at lambda = 0") {
  Rng rng(63);
  const Matrix v = rng.normal_matrix(7, 3);
  const GramMatrix k = make_gram(PoolMatrix(v), kernel::Rbf{0.5});
  const Matrix y = rng.normal_matrix(7, 2);
  const FitModel m = krr_fit(k.data(), y, 0.0);
  CHECK((krr_predict(m, k.data()) - y).cwiseAbs().maxCoeff() <= 1e-8);
  const FitModel r = krr_fit(k.data(), y, 0.3);
  const Matrix residual = (k.data() + 0.3 * Matrix::Identity(7, 7)) * r.coefficients - y;
  CHECK(residual.norm() <= 1e-7 * y.norm());
}

TEST_CASE("linear-kernel ridge equals primal ridge") {
  Rng rng(64);
  const Matrix x = rng.normal_matrix(8, 5);
  const Matrix test = rng.normal_matrix(6, 5);
  const Vector y = rng.normal_vector(8);
  for (double lambda : {0.1, 2.0}) {
    const Matrix primal = predict(ridge_fit(x, y, lambda), test);
    const Matrix dual = krr_predict(krr_fit(x * x.transpose(), y, lambda), test * x.transpose());
    CHECK((primal - dual).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("test mse") {
  Matrix x = Matrix::Identity(3, 3);
  FitModel perfect;
  perfect.coefficients = Matrix::Identity(3, 2);
  CHECK(test_mse(perfect, x, x.leftCols(2)) == 0.0);
  FitModel zero;
  zero.coefficients = Matrix::Zero(3, 2);
  CHECK(test_mse(zero, x, Matrix::Ones(3, 2)) == doctest::Approx(2.0));
  CHECK(mean_squared_error(Matrix::Zero(4, 1), Matrix::Ones(4, 1)) == 1.0);
  CHECK_THROWS_AS(test_mse(zero, Matrix(0, 3), Matrix(0, 2)), InputError);
  CHECK_THROWS_AS(mean_squared_error(Matrix::Zero(2, 1), Matrix::Zero(3, 1)), InputError);
}

TEST_CASE("classification error uses the arg-max") {
  Matrix p(3, 2);
  p << 0.9, 0.1, 0.2, 0.7, 0.6, 0.4;
  CHECK(classification_error(p, {0, 1, 1}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("empirical risk agrees with the expected-risk oracle") {
  // C is the second moment of the evaluation sample, so the mean of
  // (x^T (w - w_hat))^2 over that sample is exactly (w - w_hat)^T C (w - w_hat).
  Rng rng(65);
  const Index d = 10;
  const Vector w = rng.normal_vector(d);
  const Matrix eval = rng.normal_matrix(500, d);
  const Matrix c = eval.transpose() * eval / 500.0;
  const double sigma = 0.5;
  for (Index n : {5, 10, 20}) {
    const Matrix x = rng.normal_matrix(n, d);
    for (double lambda : {0.0, 0.1}) {
      const RiskDecomposition r = expected_risk(x, w, sigma * sigma, c, lambda);
      const int draws = 400;
      double sum = 0.0, sq = 0.0;
      for (int k = 0; k < draws; ++k) {
        const Vector y = x * w + sigma * rng.normal_vector(n);
        const Vector e = w - ridge_fit(x, y, lambda).coefficients.col(0);
        const double risk = (eval * e).squaredNorm() / 500.0;
        sum += risk;
        sq += risk * risk;
      }
      const double mean = sum / draws;
      const double se = std::sqrt(std::max(sq / draws - mean * mean, 0.0) / draws);
      CHECK(std::fabs(mean - r.total) <= 4.0 * se + 1e-12);
    }
  }
}

}  // TEST_SUITE
