#pragma once

#include "oed/types.hpp"

#include <string>
#include <variant>

namespace oed {

namespace kernel {

struct Linear {};

/// exp(-gamma * |x - z|^2)
struct Rbf {
  double gamma = 1.0;
};

/// (x . z + coef0)^degree
struct Polynomial {
  int degree = 2;
  double coef0 = 1.0;
};

/// Infinite-width NTK of a fully-connected ReLU network with `depth` hidden
/// layers.
struct NtkFc {
  int depth = 1;
};

/// A Gram matrix computed elsewhere and stored in the binary Gram format.
struct Precomputed {
  std::string path;
};

}  // namespace kernel

using KernelSpec =
    std::variant<kernel::Linear, kernel::Rbf, kernel::Polynomial, kernel::NtkFc, kernel::Precomputed>;

/// Throws InputError on gamma <= 0, degree < 1 or depth < 1.
void validate(const KernelSpec& spec);
std::string describe(const KernelSpec& spec);

/// Kernel value for a single pair of points. Precomputed specs are rejected.
double evaluate_kernel(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& z);

/// Closed-form ReLU NTK recursion with the cosine clamped to [-1, 1]:
///   Sigma^0 = x.z
///   Sigma^h = sqrt(Sxx Szz) (sin a + (pi - a) cos a) / pi
///   dSigma^h = (pi - a) / pi
///   Theta^h = Theta^{h-1} dSigma^h + Sigma^h,   Theta^0 = Sigma^0
/// where a is the angle between x and z under Sigma^{h-1}. The diagonal
/// terms Sxx, Szz are preserved by the ReLU map at this scaling.
double ntk_fc_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& z, int depth);

/// K[i][j] = k(x_i, x_j). The upper triangle is evaluated once and mirrored.
/// Throws ComputationError naming the pair on a non-finite value.
GramMatrix make_gram(const PoolMatrix& pool, const KernelSpec& spec);

/// Cross-kernel rows k(a_i, b_j), used for predictions on held-out points.
Matrix cross_kernel(const Matrix& a, const Matrix& b, const KernelSpec& spec);

}  // namespace oed
