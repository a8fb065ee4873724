#include "oed/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oed::linalg {

namespace {

double ulp(double x) {
  x = std::fabs(x);
  return std::nextafter(x, std::numeric_limits<double>::infinity()) - x;
}

}  // namespace

double rank_tolerance(double sigma_max, Index rows, Index cols) {
  return static_cast<double>(std::max(rows, cols)) * ulp(sigma_max);
}

RowSpace row_space(const Matrix& design, Index feature_dim) {
  RowSpace rs;
  if (design.rows() == 0) {
    rs.basis = Matrix::Zero(feature_dim, 0);
    rs.singular_values = Vector::Zero(0);
    return rs;
  }
  Eigen::BDCSVD<Matrix> svd(design, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double tol = rank_tolerance(s(0), design.rows(), design.cols());
  Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  rs.basis = svd.matrixV().leftCols(rank);
  rs.singular_values = s.head(rank);
  return rs;
}

Vector projector_factors(const RowSpace& rs, double lambda) {
  const Vector s2 = rs.singular_values.array().square();
  if (lambda == 0.0) return Vector::Ones(s2.size());
  return (s2.array() / (s2.array() + lambda)).matrix();
}

Vector variance_factors(const RowSpace& rs, double lambda) {
  const Vector s2 = rs.singular_values.array().square();
  if (lambda == 0.0) return s2.cwiseInverse();
  return (s2.array() / (s2.array() + lambda).square()).matrix();
}

Matrix symmetric_pinv(const Matrix& a) {
  if (a.rows() == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector& values = eig.eigenvalues();
  const double largest = values.cwiseAbs().maxCoeff();
  const double tol = rank_tolerance(largest, a.rows(), a.cols());
  Vector inv(values.size());
  for (Index i = 0; i < values.size(); ++i)
    inv(i) = std::fabs(values(i)) > tol ? 1.0 / values(i) : 0.0;
  const Matrix& q = eig.eigenvectors();
  return q * inv.asDiagonal() * q.transpose();
}

std::optional<Index> cholesky_lower(const Matrix& a, double pivot_floor, Matrix& lower) {
  const Index n = a.rows();
  lower = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double pivot = a(j, j) - lower.row(j).head(j).squaredNorm();
    if (!(pivot > pivot_floor)) return j;
    const double root = std::sqrt(pivot);
    lower(j, j) = root;
    for (Index i = j + 1; i < n; ++i) {
      lower(i, j) = (a(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / root;
    }
  }
  return std::nullopt;
}

Matrix inverse_from_cholesky(const Matrix& lower) {
  const Index n = lower.rows();
  Matrix linv = Matrix::Identity(n, n);
  lower.triangularView<Eigen::Lower>().solveInPlace(linv);
  Matrix inv = linv.transpose() * linv;
  return 0.5 * (inv + inv.transpose());
}

bool close_relative(double a, double b, double tol, double floor) {
  const double scale = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) <= tol * scale;
}

Matrix select_rows(const Matrix& m, const IndexList& indices) {
  Matrix out(static_cast<Index>(indices.size()), m.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) out.row(static_cast<Index>(r)) = m.row(indices[r]);
  return out;
}

}  // namespace oed::linalg
