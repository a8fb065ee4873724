#pragma once

#include "oed/types.hpp"

#include <optional>

namespace oed {

struct RiskDecomposition {
  double bias = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

/// Expected excess risk of the ridge estimator fitted on `design` (n x d),
/// averaged over the training noise:
///   bias     = |C^{1/2} (I - M_lambda^+ M) w|^2
///   variance = sigma2 * Tr(C M_lambda^{+2} M)
/// with M = X^T X and M_lambda = M + lambda I. Valid for n < d and n >= d.
/// Throws InputError on inconsistent shapes or a non-PSD second moment.
RiskDecomposition expected_risk(const Matrix& design, const Vector& w, double sigma2,
                                const Matrix& second_moment, double lambda);

/// The two factors of the pool criterion before t is applied:
///   bias     = |V (I - M_lambda^+ M)|_F^2
///   variance = Tr(V M_lambda^{+2} M V^T)
struct PsiTerms {
  double bias = 0.0;
  double variance = 0.0;
};

PsiTerms psi_terms(const Matrix& pool, const Matrix& design, double lambda);

/// Pool criterion bias + t * variance for the design V_S. For infinite t
/// the variance factor alone is returned.
double psi_bar(const PoolMatrix& pool, const IndexList& selected, const CriterionParams& params);
double combine_psi(const PsiTerms& terms, const CriterionParams& params);

/// Pivot floor under which a candidate's Schur complement counts as zero:
/// 1e-10 * max diag(K).
double schur_floor(const GramMatrix& gram);

/// Trace pieces of the kernelized criterion for a subset S, with
/// A = (K_SS + lambda I)^{-1} and B = K_{:,S}^T K_{:,S}:
///   tr_ba  = Tr(B A),  tr_ba2 = Tr(B A^2)
struct KernelTraces {
  double tr_ba = 0.0;
  double tr_ba2 = 0.0;
};

/// Criterion value from the traces:
///   J = -Tr(BA) + (t - lambda) Tr(BA^2),  or Tr(BA^2) for infinite t.
double combine_traces(const KernelTraces& traces, const CriterionParams& params);

/// Outcome of evaluating the kernelized criterion. `degenerate_position`
/// holds the position in S whose Schur complement fell below the floor.
struct KernelEvaluation {
  std::optional<KernelTraces> traces;
  std::optional<std::size_t> degenerate_position;
};

KernelEvaluation evaluate_kernel_criterion(const GramMatrix& gram, const IndexList& selected, double lambda,
                                           double pivot_floor);

/// Kernelized criterion J_{lambda,t}(S) = Tr(K_{:,S} [A(-2I + K_SS A) + t A^2] K_{:,S}^T).
/// J of the empty set is 0. Throws DegenerateSubsetError naming the pool
/// index whose addition makes K_SS + lambda I numerically singular.
double j_criterion(const GramMatrix& gram, const IndexList& selected, const CriterionParams& params);

}  // namespace oed
