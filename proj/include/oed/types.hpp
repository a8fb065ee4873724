#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace oed {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ordered sequence of pool indices.
using IndexList = std::vector<Index>;

/// Unlabeled candidate pool; row i is the point x_i.
class PoolMatrix {
 public:
  /// Throws InputError when empty or when any entry is not finite.
  explicit PoolMatrix(Matrix data);

  Index rows() const noexcept { return data_.rows(); }
  Index cols() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }
  auto row(Index i) const { return data_.row(i); }

 private:
  Matrix data_;
};

/// Symmetric kernel matrix over a pool. Immutable once built.
class GramMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-10;
  static constexpr double kPsdTolerance = 1e-8;

  /// Validates squareness, finiteness and symmetry (relative 1e-10).
  explicit GramMatrix(Matrix data);

  Index size() const noexcept { return data_.rows(); }
  const Matrix& data() const noexcept { return data_; }
  double operator()(Index i, Index j) const { return data_(i, j); }
  double trace() const { return data_.trace(); }
  double max_diagonal() const { return data_.diagonal().maxCoeff(); }

  /// Smallest eigenvalue is at least -1e-8 * max diagonal entry.
  bool is_numerically_psd() const;
  double min_eigenvalue() const;

 private:
  Matrix data_;
};

/// Ridge coefficient lambda and bias/variance tradeoff t.
/// An infinite t means the variance factor alone.
struct CriterionParams {
  double lambda = 0.0;
  double t = 0.0;

  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  /// Throws InputError when lambda < 0, t < 0 or either is NaN.
  void validate() const;
  bool variance_only() const noexcept { return t == kInfinity; }
};

}  // namespace oed
