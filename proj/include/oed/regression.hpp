#pragma once

#include "oed/types.hpp"

namespace oed {

/// A fitted regressor. Primal models hold weights (d x L); dual models hold
/// coefficients over the training points (n x L) and are evaluated against
/// kernel rows K_{x,S}. L is the number of outputs.
struct FitModel {
  enum class Mode { Primal, Dual };

  Mode mode = Mode::Primal;
  Matrix coefficients;
  double lambda = 0.0;

  Index outputs() const noexcept { return coefficients.cols(); }
};

/// w = (X^T X + lambda I)^+ X^T y. At lambda = 0 this is the minimum-norm
/// least-squares solution X^+ y, computed from an SVD of X with the usual
/// rank tolerance; lambda > 0 uses a Cholesky solve of the normal equations
/// (or of the n x n dual system when n < d).
FitModel ridge_fit(const Matrix& x, const Matrix& y, double lambda);

/// alpha = (K_SS + lambda I)^+ y_S. lambda = 0 goes through the symmetric
/// pseudoinverse so singular Grams are handled.
FitModel krr_fit(const Matrix& k_ss, const Matrix& y, double lambda);

/// Rows of predictions: X w for primal models, K_{x,S} alpha for dual ones.
Matrix predict(const FitModel& model, const Matrix& inputs);
Matrix krr_predict(const FitModel& model, const Matrix& k_xs);

/// Mean over rows of the squared Euclidean prediction error.
/// Throws InputError on an empty test set or mismatched shapes.
double test_mse(const FitModel& model, const Matrix& inputs, const Matrix& targets);
double mean_squared_error(const Matrix& predictions, const Matrix& targets);

/// Fraction of rows whose arg-max prediction differs from the class id.
double classification_error(const Matrix& predictions, const std::vector<int>& class_ids);

}  // namespace oed
