#include "oracles.hpp"

#include "oed/error.hpp"
#include "oed/gram_io.hpp"
#include "oed/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace oed;

TEST_SUITE("kernels") {

TEST_CASE("linear kernel of orthonormal rows is the identity") {
  const GramMatrix k = make_gram(PoolMatrix(Matrix::Identity(2, 2)), kernel::Linear{});
  CHECK(k.data() == Matrix::Identity(2, 2));
}

TEST_CASE("linear Gram equals V V^T") {
  Rng rng(3);
  const Matrix v = rng.normal_matrix(30, 7);
  const Matrix direct = v * v.transpose();
  const GramMatrix k = make_gram(PoolMatrix(v), kernel::Linear{});
  CHECK((k.data() - direct).cwiseAbs().maxCoeff() <= 1e-12 * direct.cwiseAbs().maxCoeff());
  CHECK(k.data() == k.data().transpose());
}

TEST_CASE("rbf diagonal is one and entries lie in (0, 1]") {
  Rng rng(4);
  const GramMatrix k = make_gram(PoolMatrix(rng.normal_matrix(25, 4)), kernel::Rbf{0.3});
  for (Index i = 0; i < k.size(); ++i) CHECK(k(i, i) == 1.0);
  CHECK(k.data().minCoeff() > 0.0);
  CHECK(k.data().maxCoeff() <= 1.0);
  CHECK(k.is_numerically_psd());
}

TEST_CASE("rbf off-diagonal for points 0 and 1 with gamma 1") {
  Matrix v(2, 1);
  v << 0.0, 1.0;
  const GramMatrix k = make_gram(PoolMatrix(v), kernel::Rbf{1.0});
  CHECK(k(0, 1) == doctest::Approx(0.3678794412).epsilon(1e-10));
  CHECK(k(1, 0) == k(0, 1));
}

TEST_CASE("mnist-scale rbf gamma is accepted") {
  CHECK_NOTHROW(validate(KernelSpec{kernel::Rbf{1.0 / 784.0}}));
  CHECK_THROWS_AS(validate(KernelSpec{kernel::Rbf{0.0}}), InputError);
  CHECK_THROWS_AS(validate(KernelSpec{kernel::Polynomial{0, 1.0}}), InputError);
  CHECK_THROWS_AS(validate(KernelSpec{kernel::NtkFc{0}}), InputError);
}

TEST_CASE("polynomial kernel") {
  Vector x(2), z(2);
  x << 1.0, 2.0;
  z << 3.0, -1.0;
  CHECK(evaluate_kernel(kernel::Polynomial{3, 1.0}, x, z) == doctest::Approx(8.0));
}

TEST_CASE("ntk-fc on orthogonal unit vectors, depth 1") {
  // Sigma^0 = 0 gives angle pi/2: Sigma^1 = (sin + 0) / pi, and Theta^0 = 0.
  Vector x = Vector::Zero(3), z = Vector::Zero(3);
  x(0) = 1.0;
  z(2) = 1.0;
  const double hand = 1.0 / std::numbers::pi;
  CHECK(ntk_fc_kernel(x, z, 1) == doctest::Approx(0.3183098862).epsilon(1e-10));
  CHECK(ntk_fc_kernel(x, z, 1) == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("ntk-fc diagonal at depth 1 is 2 |x|^2 and the kernel is symmetric") {
  Rng rng(8);
  const Vector x = rng.normal_vector(5);
  const Vector z = rng.normal_vector(5);
  CHECK(ntk_fc_kernel(x, x, 1) == doctest::Approx(2.0 * x.squaredNorm()).epsilon(1e-12));
  for (int depth = 1; depth <= 4; ++depth) CHECK(ntk_fc_kernel(x, z, depth) == ntk_fc_kernel(z, x, depth));
}

TEST_CASE("ntk-fc handles zero vectors and parallel inputs") {
  const Vector zero = Vector::Zero(3);
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  CHECK(std::isfinite(ntk_fc_kernel(zero, x, 3)));
  CHECK(ntk_fc_kernel(zero, x, 3) == 0.0);
  // A scaled copy sits at cosine one; rounding may push it past 1 without the clamp.
  CHECK(std::isfinite(ntk_fc_kernel(x, 3.0 * x, 5)));
  CHECK(std::isfinite(ntk_fc_kernel(x, -x, 5)));
}

TEST_CASE("ntk-fc Gram over random points is numerically PSD") {
  Rng rng(9);
  for (int depth = 1; depth <= 4; ++depth) {
    const GramMatrix k = make_gram(PoolMatrix(rng.normal_matrix(10, 6)), kernel::NtkFc{depth});
    Eigen::SelfAdjointEigenSolver<Matrix> eig(k.data());
    CHECK(eig.eigenvalues()(0) >= -1e-8 * k.max_diagonal());
    CHECK(k.is_numerically_psd());
  }
}

TEST_CASE("cross kernel matches the Gram block") {
  Rng rng(10);
  const Matrix v = rng.normal_matrix(12, 3);
  for (const KernelSpec& spec : {KernelSpec{kernel::Linear{}}, KernelSpec{kernel::Rbf{0.5}},
                                 KernelSpec{kernel::NtkFc{2}}, KernelSpec{kernel::Polynomial{2, 1.0}}}) {
    const GramMatrix k = make_gram(PoolMatrix(v), spec);
    const Matrix c = cross_kernel(v.topRows(4), v, spec);
    CHECK((c - k.data().topRows(4)).cwiseAbs().maxCoeff() <= 1e-12 * k.data().cwiseAbs().maxCoeff());
  }
}

TEST_CASE("non-finite kernel values are reported with the pair") {
  Matrix v(2, 1);
  v << 1e200, 1e200;
  try {
    make_gram(PoolMatrix(v), kernel::Polynomial{3, 0.0});
    FAIL("expected a computation error");
  } catch (const ComputationError& e) {
    CHECK(std::string(e.what()).find("k(x_0, x_0)") != std::string::npos);
  }
}

TEST_CASE("pool and Gram validation") {
  CHECK_THROWS_AS(PoolMatrix(Matrix(0, 3)), InputError);
  Matrix bad = Matrix::Ones(2, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(PoolMatrix{bad}, InputError);
  CHECK_THROWS_AS(GramMatrix(Matrix::Ones(2, 3)), InputError);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 1e-3;
  CHECK_THROWS_AS(GramMatrix{asym}, InputError);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_FALSE(GramMatrix(indefinite).is_numerically_psd());
}

TEST_CASE("binary Gram round trip is bit exact") {
  Rng rng(11);
  const Matrix v = rng.normal_matrix(5, 5);
  const GramMatrix k(v * v.transpose());
  std::stringstream buffer;
  write_gram(k, buffer);
  CHECK(buffer.str().size() == 4 + 4 + 25 * 8);
  CHECK(buffer.str().substr(0, 4) == "OEDG");
  const GramMatrix back = read_gram(buffer);
  CHECK(std::memcmp(back.data().data(), k.data().data(), 25 * sizeof(double)) == 0);

  const auto path = std::filesystem::temp_directory_path() / "oed_roundtrip.bin";
  save_gram(k, path.string());
  CHECK(load_gram(path.string()).data() == k.data());
  std::filesystem::remove(path);
}

TEST_CASE("binary Gram layout is little-endian row-major") {
  Matrix a(2, 2);
  a << 1.0, 2.0, 2.0, 3.0;
  std::stringstream buffer;
  write_gram(GramMatrix(a), buffer);
  const std::string bytes = buffer.str();
  CHECK(static_cast<unsigned char>(bytes[4]) == 2);
  CHECK(bytes[5] == 0);
  double second = 0.0;
  std::memcpy(&second, bytes.data() + 8 + 8, 8);
  CHECK(second == 2.0);
}

TEST_CASE("malformed Gram files are format errors") {
  Matrix a = Matrix::Identity(3, 3);
  std::stringstream good;
  write_gram(GramMatrix(a), good);
  const std::string bytes = good.str();

  std::stringstream magic("XEDG" + bytes.substr(4));
  CHECK_THROWS_AS(read_gram(magic), FormatError);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_gram(truncated), FormatError);

  std::stringstream trailing(bytes + "x");
  CHECK_THROWS_AS(read_gram(trailing), FormatError);

  std::string asym = bytes;
  const double off = 1e-3;
  std::memcpy(asym.data() + 8 + 8, &off, 8);
  std::stringstream asymmetric(asym);
  CHECK_THROWS_AS(read_gram(asymmetric), FormatError);

  CHECK_THROWS_AS(load_gram("/nonexistent/gram.bin"), Error);
}

TEST_CASE("checksum is stable and sensitive") {
  Matrix a = Matrix::Identity(3, 3);
  const auto c1 = matrix_checksum(a);
  CHECK(checksum_hex(c1).size() == 16);
  CHECK(matrix_checksum(a) == c1);
  a(2, 2) = std::nextafter(1.0, 2.0);
  CHECK(matrix_checksum(a) != c1);
  CHECK(checksum_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

}  // TEST_SUITE
