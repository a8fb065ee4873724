#pragma once

#include "oed/types.hpp"

#include <optional>

namespace oed::linalg {

/// Singular values below max(rows, cols) * ulp(sigma_max) count as zero.
double rank_tolerance(double sigma_max, Index rows, Index cols);

/// Right singular structure of a design X (n x d): X = U diag(s) V^T with
/// the numerically-zero singular values already dropped.
struct RowSpace {
  Matrix basis;            // d x r, orthonormal columns spanning the row space
  Vector singular_values;  // r, descending, all above the rank tolerance

  Index rank() const noexcept { return basis.cols(); }
};

/// Empty designs (n == 0) give rank 0.
RowSpace row_space(const Matrix& design, Index feature_dim);

/// Spectral filter factors of the "soft projector" M_lambda^+ M and of
/// M_lambda^{+2} M on the row space, for M = X^T X.
///   projector: s^2 / (s^2 + lambda)      (1 at lambda = 0)
///   variance:  s^2 / (s^2 + lambda)^2    (1 / s^2 at lambda = 0)
Vector projector_factors(const RowSpace& rs, double lambda);
Vector variance_factors(const RowSpace& rs, double lambda);

/// Moore-Penrose pseudoinverse of a symmetric matrix via its
/// eigendecomposition; |eigenvalues| below n * ulp(max |eigenvalue|) are
/// treated as zero.
Matrix symmetric_pinv(const Matrix& a);

/// Lower Cholesky factor of a symmetric matrix without pivoting. Returns the
/// position of the first pivot (Schur complement of that row against the
/// preceding rows) that is <= pivot_floor, or nullopt on success.
std::optional<Index> cholesky_lower(const Matrix& a, double pivot_floor, Matrix& lower);

/// Inverse of L L^T given the lower factor.
Matrix inverse_from_cholesky(const Matrix& lower);

/// |a - b| <= tol * max(|a|, |b|, floor).
bool close_relative(double a, double b, double tol, double floor = 0.0);

/// Gathers the rows listed in `indices`.
Matrix select_rows(const Matrix& m, const IndexList& indices);

}  // namespace oed::linalg
