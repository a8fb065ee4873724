#include "oed/kernels.hpp"

#include "oed/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace oed {

PoolMatrix::PoolMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) throw InputError("pool must have at least one row and one column");
  if (!data_.allFinite()) throw InputError("pool contains non-finite entries");
}

GramMatrix::GramMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() != data_.cols()) throw InputError("Gram matrix must be square");
  if (!data_.allFinite()) throw InputError("Gram matrix contains non-finite entries");
  const double scale = std::max(data_.cwiseAbs().maxCoeff(), 1e-300);
  for (Index i = 0; i < data_.rows(); ++i) {
    for (Index j = i + 1; j < data_.cols(); ++j) {
      if (std::fabs(data_(i, j) - data_(j, i)) > kSymmetryTolerance * scale) {
        std::ostringstream msg;
        msg << "Gram matrix is not symmetric at (" << i << ", " << j << "): " << data_(i, j) << " vs "
            << data_(j, i);
        throw InputError(msg.str());
      }
    }
  }
}

double GramMatrix::min_eigenvalue() const {
  const Matrix sym = 0.5 * (data_ + data_.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

bool GramMatrix::is_numerically_psd() const {
  return min_eigenvalue() >= -kPsdTolerance * std::max(max_diagonal(), 0.0);
}

void validate(const KernelSpec& spec) {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, kernel::Rbf>) {
          if (!(k.gamma > 0.0) || !std::isfinite(k.gamma)) throw InputError("rbf gamma must be positive");
        } else if constexpr (std::is_same_v<T, kernel::Polynomial>) {
          if (k.degree < 1) throw InputError("polynomial degree must be >= 1");
          if (!std::isfinite(k.coef0)) throw InputError("polynomial coef0 must be finite");
        } else if constexpr (std::is_same_v<T, kernel::NtkFc>) {
          if (k.depth < 1) throw InputError("ntk-fc depth must be >= 1");
        }
      },
      spec);
}

std::string describe(const KernelSpec& spec) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        std::ostringstream out;
        if constexpr (std::is_same_v<T, kernel::Linear>) {
          out << "linear";
        } else if constexpr (std::is_same_v<T, kernel::Rbf>) {
          out << "rbf(gamma=" << k.gamma << ")";
        } else if constexpr (std::is_same_v<T, kernel::Polynomial>) {
          out << "poly(degree=" << k.degree << ",coef0=" << k.coef0 << ")";
        } else if constexpr (std::is_same_v<T, kernel::NtkFc>) {
          out << "ntk-fc(depth=" << k.depth << ")";
        } else {
          out << "precomputed(" << k.path << ")";
        }
        return out.str();
      },
      spec);
}

double ntk_fc_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z, int depth) {
  if (x.size() != z.size()) throw InputError("ntk-fc inputs must have the same dimension");
  if (depth < 1) throw InputError("ntk-fc depth must be >= 1");
  const double sxx = x.squaredNorm();
  const double szz = z.squaredNorm();
  const double norm_product = std::sqrt(sxx * szz);
  double sigma = x.dot(z);
  double theta = sigma;
  for (int layer = 0; layer < depth; ++layer) {
    double cosine = norm_product > 0.0 ? sigma / norm_product : 0.0;
    cosine = std::clamp(cosine, -1.0, 1.0);
    const double angle = std::acos(cosine);
    const double next_sigma =
        norm_product * (std::sin(angle) + (std::numbers::pi - angle) * cosine) / std::numbers::pi;
    const double derivative = (std::numbers::pi - angle) / std::numbers::pi;
    theta = theta * derivative + next_sigma;
    sigma = next_sigma;
  }
  return theta;
}

namespace {

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, kernel::Linear>) {
          return x.dot(z);
        } else if constexpr (std::is_same_v<T, kernel::Rbf>) {
          return std::exp(-k.gamma * (x - z).squaredNorm());
        } else if constexpr (std::is_same_v<T, kernel::Polynomial>) {
          return std::pow(x.dot(z) + k.coef0, k.degree);
        } else if constexpr (std::is_same_v<T, kernel::NtkFc>) {
          return ntk_fc_kernel(x, z, k.depth);
        } else {
          throw InputError("precomputed kernels cannot be evaluated pointwise; use load_gram");
        }
      },
      spec);
}

}  // namespace

double evaluate_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& z) {
  validate(spec);
  if (x.size() != z.size()) throw InputError("kernel inputs must have the same dimension");
  return kernel_value(spec, x, z);
}

GramMatrix make_gram(const PoolMatrix& pool, const KernelSpec& spec) {
  validate(spec);
  if (std::holds_alternative<kernel::Precomputed>(spec))
    throw InputError("make_gram does not accept a precomputed kernel; use load_gram");
  const Index m = pool.rows();
  Matrix gram(m, m);
  if (std::holds_alternative<kernel::Linear>(spec)) {
    gram.noalias() = pool.data() * pool.data().transpose();
  } else {
    const Matrix points = pool.data().transpose();
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i <= j; ++i) gram(i, j) = kernel_value(spec, points.col(i), points.col(j));
  }
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i <= j; ++i) {
      if (!std::isfinite(gram(i, j))) {
        std::ostringstream msg;
        msg << "kernel value k(x_" << i << ", x_" << j << ") is not finite";
        throw ComputationError(msg.str());
      }
      gram(j, i) = gram(i, j);
    }
  }
  return GramMatrix(std::move(gram));
}

Matrix cross_kernel(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
  validate(spec);
  if (a.cols() != b.cols()) throw InputError("cross_kernel inputs must have the same feature dimension");
  if (std::holds_alternative<kernel::Linear>(spec)) return a * b.transpose();
  const Matrix at = a.transpose();
  const Matrix bt = b.transpose();
  Matrix out(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j)
    for (Index i = 0; i < a.rows(); ++i) out(i, j) = kernel_value(spec, at.col(i), bt.col(j));
  if (!out.allFinite()) throw ComputationError("cross kernel produced non-finite values");
  return out;
}

}  // namespace oed
