#pragma once

#include "oed/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oed {

struct DesignResult {
  IndexList indices;
  std::vector<double> scores;       // criterion value after each addition
  std::vector<double> step_seconds;  // wall time of each greedy step
  CriterionParams params;
  std::string method;
  std::optional<std::uint64_t> seed;
  double wall_seconds = 0.0;
};

/// Restricts which pool indices each greedy step may scan.
struct CandidateOptions {
  /// Fixed candidate subset; selected indices are removed as the design grows.
  std::optional<IndexList> candidates;
  /// Per-step random subsample of this many unselected candidates.
  std::optional<Index> subsample;
  std::uint64_t seed = 0;
};

/// Greedy minimization of the kernelized criterion, re-evaluating every
/// candidate from scratch. Ties (scores within a relative 1e-8 of each other,
/// scaled by max(Tr K, |score|)) go to the lowest index; candidates whose
/// Schur complement is below schur_floor(K) are skipped. Throws
/// DegeneratePoolError when no admissible candidate remains.
DesignResult greedy_naive(const GramMatrix& gram, Index n, const CriterionParams& params,
                          const CandidateOptions& options = {});

/// Same selection as greedy_naive, using incremental inverse updates (see
/// DesignState).
DesignResult greedy_fast(const GramMatrix& gram, Index n, const CriterionParams& params,
                         const CandidateOptions& options = {});

/// greedy_fast on the variance factor alone (t = infinity).
DesignResult select_variance_only(const GramMatrix& gram, Index n, double lambda,
                                  const CandidateOptions& options = {});

/// Greedy minimization of the pool criterion in feature space. Unlike the
/// kernel path it stays well defined at lambda = 0 after the design spans
/// the whole feature space (n > d), where M^+ is a true inverse.
DesignResult greedy_features(const PoolMatrix& pool, Index n, const CriterionParams& params,
                             const CandidateOptions& options = {});

/// Uniform sample without replacement, in draw order.
DesignResult select_random(Index m, Index n, std::uint64_t seed);

/// Randomized k-centers: the first center is uniform, later centers are
/// drawn with probability proportional to the squared distance to the
/// nearest chosen center (uniform over the rest if all distances are 0).
DesignResult select_k_centers(const PoolMatrix& pool, Index n, std::uint64_t seed);

/// 1 - max_i p_i(x) with p_i(x) = (2 pi)^{-L/2} exp(-|e_i - f(x)|^2 / 2) for
/// each prediction row f(x) of length L.
Vector uncertainty_scores(const Matrix& predictions, int labels);

/// Largest distance from a pool row to its nearest selected row.
double coverage_radius(const Matrix& pool, const IndexList& selected);

/// Incremental state of the fast greedy selector.
///
/// With S the current selection and s = |S|:
///   A = (K_SS + lambda I)^{-1}   B = K_{:,S}^T K_{:,S}
///   C = B A                      D = B A^2            E = A^2
/// Adding i is a rank-one change of A (bordered inverse with Schur
/// denominator K_ii + lambda - K_Si^T A K_Si) and a rank-two change of B, so
/// the traces Tr(BA), Tr(BA^2) of S + {i} follow from the cached matrices in
/// closed form. Per-candidate columns A K_{S,:}, C K_{S,:}, E K_{S,:} and
/// K_{:,S}^T K are kept alongside so a scan costs O(s) per candidate; a commit
/// costs O(s^2 + m s) plus one Gram mat-vec.
class DesignState {
 public:
  DesignState(const GramMatrix& gram, const CriterionParams& params, Index capacity);

  struct Candidate {
    bool admissible = false;
    double schur = 0.0;
    double score = 0.0;
  };

  Candidate evaluate(Index i) const;
  void commit(Index i);
  /// Rebuilds every cache from K and the current selection.
  void refresh();

  const IndexList& selected() const noexcept { return selected_; }
  Index size() const noexcept { return static_cast<Index>(selected_.size()); }
  double score() const noexcept { return score_; }
  bool is_selected(Index i) const { return in_design_[static_cast<std::size_t>(i)]; }

  Matrix inverse() const { return a_.topLeftCorner(size(), size()); }
  Matrix cross_gram() const { return b_.topLeftCorner(size(), size()); }
  Matrix c_cache() const { return c_.topLeftCorner(size(), size()); }
  Matrix d_cache() const { return d_.topLeftCorner(size(), size()); }
  Matrix e_cache() const { return e_.topLeftCorner(size(), size()); }

  /// Largest relative deviation between each cache and a rebuild from scratch.
  struct Coherence {
    double inverse_residual = 0.0;  // |A (K_SS + lambda I) - I|_max
    double cross_gram = 0.0;
    double products = 0.0;  // C, D, E
    double columns = 0.0;   // per-candidate caches
    double score = 0.0;
  };
  Coherence coherence() const;

 private:
  const GramMatrix* gram_;
  CriterionParams params_;
  Index capacity_;
  double floor_;
  IndexList selected_;
  std::vector<bool> in_design_;
  Vector column_sq_norms_;  // diag(K^T K)

  Matrix a_, b_, c_, d_, e_;   // capacity x capacity, top-left s x s live
  Matrix rows_;                // K_{S,:}          capacity x m
  Matrix kk_;                  // K_{:,S}^T K      capacity x m
  Matrix p1_, p2_, p3_;        // A, C, E times K_{S,:}
  double tr_c_ = 0.0;
  double tr_d_ = 0.0;
  double score_ = 0.0;
};

}  // namespace oed
