#include "oed/criteria.hpp"

#include "oed/error.hpp"
#include "oed/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oed {

void CriterionParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be a finite non-negative number");
  if (!(t >= 0.0)) throw InputError("t must be non-negative or infinite");
}

namespace {

void check_indices(const IndexList& selected, Index m) {
  for (Index i : selected) {
    if (i < 0 || i >= m) {
      std::ostringstream msg;
      msg << "index " << i << " outside pool of size " << m;
      throw InputError(msg.str());
    }
  }
}

}  // namespace

RiskDecomposition expected_risk(const Matrix& design, const Vector& w, double sigma2,
                                const Matrix& second_moment, double lambda) {
  const Index d = w.size();
  if (design.cols() != d && design.rows() != 0) throw InputError("design and w dimensions differ");
  if (second_moment.rows() != d || second_moment.cols() != d) throw InputError("second moment must be d x d");
  if (!(sigma2 >= 0.0)) throw InputError("noise variance must be non-negative");
  if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");

  const Matrix sym = 0.5 * (second_moment + second_moment.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const double psd_floor = -1e-8 * std::max(sym.diagonal().maxCoeff(), 0.0);
  if (eig.eigenvalues()(0) < psd_floor) throw InputError("second moment matrix is not positive semidefinite");

  const Matrix x = design.rows() == 0 ? Matrix(0, d) : design;
  const linalg::RowSpace rs = linalg::row_space(x, d);
  const Vector proj = linalg::projector_factors(rs, lambda);
  const Vector var = linalg::variance_factors(rs, lambda);

  const Vector residual = w - rs.basis * proj.cwiseProduct(rs.basis.transpose() * w);
  RiskDecomposition out;
  out.bias = residual.dot(sym * residual);
  const Matrix cb = sym * rs.basis;
  double trace = 0.0;
  for (Index k = 0; k < rs.rank(); ++k) trace += var(k) * rs.basis.col(k).dot(cb.col(k));
  out.variance = sigma2 * trace;
  out.total = out.bias + out.variance;
  return out;
}

PsiTerms psi_terms(const Matrix& pool, const Matrix& design, double lambda) {
  if (design.rows() > 0 && design.cols() != pool.cols()) throw InputError("design and pool dimensions differ");
  const linalg::RowSpace rs = linalg::row_space(design, pool.cols());
  const Vector proj = linalg::projector_factors(rs, lambda);
  const Vector var = linalg::variance_factors(rs, lambda);
  const Matrix projected = pool * rs.basis;
  PsiTerms out;
  out.bias = (pool - projected * proj.asDiagonal() * rs.basis.transpose()).squaredNorm();
  out.variance = (projected.colwise().squaredNorm().transpose().cwiseProduct(var)).sum();
  return out;
}

double combine_psi(const PsiTerms& terms, const CriterionParams& params) {
  if (params.variance_only()) return terms.variance;
  return terms.bias + params.t * terms.variance;
}

double psi_bar(const PoolMatrix& pool, const IndexList& selected, const CriterionParams& params) {
  params.validate();
  check_indices(selected, pool.rows());
  const Matrix design = linalg::select_rows(pool.data(), selected);
  return combine_psi(psi_terms(pool.data(), design, params.lambda), params);
}

double schur_floor(const GramMatrix& gram) { return 1e-10 * std::max(gram.max_diagonal(), 0.0); }

double combine_traces(const KernelTraces& traces, const CriterionParams& params) {
  if (params.variance_only()) return traces.tr_ba2;
  return -traces.tr_ba + (params.t - params.lambda) * traces.tr_ba2;
}

KernelEvaluation evaluate_kernel_criterion(const GramMatrix& gram, const IndexList& selected, double lambda,
                                           double pivot_floor) {
  check_indices(selected, gram.size());
  KernelEvaluation out;
  const Index n = static_cast<Index>(selected.size());
  if (n == 0) {
    out.traces = KernelTraces{};
    return out;
  }
  const Matrix& k = gram.data();
  Matrix shifted(n, n);
  Matrix columns(k.rows(), n);
  for (Index b = 0; b < n; ++b) {
    columns.col(b) = k.col(selected[b]);
    for (Index a = 0; a < n; ++a) shifted(a, b) = k(selected[a], selected[b]);
  }
  shifted.diagonal().array() += lambda;
  Matrix lower;
  if (const auto bad = linalg::cholesky_lower(shifted, pivot_floor, lower)) {
    out.degenerate_position = static_cast<std::size_t>(*bad);
    return out;
  }
  const Matrix inverse = linalg::inverse_from_cholesky(lower);
  const Matrix y = columns * inverse;
  out.traces = KernelTraces{columns.cwiseProduct(y).sum(), y.squaredNorm()};
  return out;
}

double j_criterion(const GramMatrix& gram, const IndexList& selected, const CriterionParams& params) {
  params.validate();
  const KernelEvaluation eval = evaluate_kernel_criterion(gram, selected, params.lambda, schur_floor(gram));
  if (eval.degenerate_position) {
    const Index offending = selected[*eval.degenerate_position];
    std::ostringstream msg;
    msg << "kernel submatrix becomes singular when adding pool index " << offending;
    throw DegenerateSubsetError(static_cast<std::size_t>(offending), msg.str());
  }
  return combine_traces(*eval.traces, params);
}

}  // namespace oed
