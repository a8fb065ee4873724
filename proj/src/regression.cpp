#include "oed/regression.hpp"

#include "oed/error.hpp"
#include "oed/linalg.hpp"

#include <sstream>

namespace oed {

namespace {

void check_rows(Index expected, Index got, const char* what) {
  if (expected != got) {
    std::ostringstream msg;
    msg << what << ": expected " << expected << " rows, got " << got;
    throw InputError(msg.str());
  }
}

Matrix spd_solve(Matrix system, const Matrix& rhs) {
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) throw ComputationError("shifted system is not positive definite");
  return llt.solve(rhs);
}

}  // namespace

FitModel ridge_fit(const Matrix& x, const Matrix& y, double lambda) {
  if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");
  check_rows(x.rows(), y.rows(), "ridge_fit targets");
  FitModel model;
  model.mode = FitModel::Mode::Primal;
  model.lambda = lambda;
  const Index n = x.rows();
  const Index d = x.cols();
  if (n == 0) {
    model.coefficients = Matrix::Zero(d, y.cols());
    return model;
  }
  if (lambda == 0.0) {
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double tol = linalg::rank_tolerance(s.size() ? s(0) : 0.0, n, d);
    Index r = 0;
    while (r < s.size() && s(r) > tol) ++r;
    const Matrix uty = svd.matrixU().leftCols(r).transpose() * y;
    model.coefficients = svd.matrixV().leftCols(r) * (s.head(r).cwiseInverse().asDiagonal() * uty);
    return model;
  }
  if (n < d) {
    Matrix gram = x * x.transpose();
    gram.diagonal().array() += lambda;
    model.coefficients = x.transpose() * spd_solve(std::move(gram), y);
  } else {
    Matrix normal = x.transpose() * x;
    normal.diagonal().array() += lambda;
    model.coefficients = spd_solve(std::move(normal), x.transpose() * y);
  }
  return model;
}

FitModel krr_fit(const Matrix& k_ss, const Matrix& y, double lambda) {
  if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");
  if (k_ss.rows() != k_ss.cols()) throw InputError("kernel block must be square");
  check_rows(k_ss.rows(), y.rows(), "krr_fit targets");
  FitModel model;
  model.mode = FitModel::Mode::Dual;
  model.lambda = lambda;
  const Matrix sym = 0.5 * (k_ss + k_ss.transpose());
  if (lambda == 0.0) {
    model.coefficients = linalg::symmetric_pinv(sym) * y;
  } else {
    Matrix shifted = sym;
    shifted.diagonal().array() += lambda;
    model.coefficients = spd_solve(std::move(shifted), y);
  }
  return model;
}

Matrix predict(const FitModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.coefficients.rows()) throw InputError("input width does not match the model");
  return inputs * model.coefficients;
}

Matrix krr_predict(const FitModel& model, const Matrix& k_xs) {
  if (model.mode != FitModel::Mode::Dual) throw InputError("krr_predict needs a dual model");
  return predict(model, k_xs);
}

double mean_squared_error(const Matrix& predictions, const Matrix& targets) {
  if (targets.rows() == 0) throw InputError("empty test set");
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw InputError("predictions and targets differ in shape");
  return (predictions - targets).rowwise().squaredNorm().mean();
}

double test_mse(const FitModel& model, const Matrix& inputs, const Matrix& targets) {
  if (inputs.rows() == 0) throw InputError("empty test set");
  return mean_squared_error(predict(model, inputs), targets);
}

double classification_error(const Matrix& predictions, const std::vector<int>& class_ids) {
  if (predictions.rows() == 0) throw InputError("empty test set");
  check_rows(static_cast<Index>(class_ids.size()), predictions.rows(), "class ids");
  Index wrong = 0;
  for (Index r = 0; r < predictions.rows(); ++r) {
    Index best = 0;
    predictions.row(r).maxCoeff(&best);
    if (best != class_ids[static_cast<std::size_t>(r)]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(predictions.rows());
}

}  // namespace oed
