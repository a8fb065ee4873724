#include "candidates.hpp"
#include "oed/criteria.hpp"
#include "oed/error.hpp"
#include "oed/linalg.hpp"
#include "oed/selection.hpp"

#include <cmath>
#include <limits>

namespace oed {

namespace {

constexpr Index kRebuildInterval = 32;
// A candidate extends the row space when its residual against the current
// span exceeds this fraction of its norm.
constexpr double kNewDirectionRatio = 1e-8;

/// Pool criterion bookkeeping with G = V^T V.
///
/// lambda = 0: keeps an orthonormal basis Q of the design's row space and
/// M^+. A candidate x with residual x_perp = (I - QQ^T) x of norm beta > 0
/// adds q = x_perp / beta to the span and gives
///   M'^+ = M^+ - (z q^T + q z^T) / beta + (1 + x^T z) / beta^2 q q^T,  z = M^+ x
/// otherwise the range-restricted Sherman-Morrison update
///   M'^+ = M^+ - z z^T / (1 + x^T z).
/// bias = |V|_F^2 - sum_q q^T G q, variance = Tr(G M^+).
///
/// lambda > 0: keeps H = (M + lambda I)^{-1}; with T1 = Tr(G H), T2 = Tr(G H^2)
///   bias = lambda^2 T2,  variance = T1 - lambda T2.
class FeatureState {
 public:
  FeatureState(const Matrix& pool, double lambda) : pool_(pool), lambda_(lambda) {
    const Index d = pool.cols();
    gram_ = pool.transpose() * pool;
    total_ = pool.squaredNorm();
    if (lambda_ > 0.0) {
      inverse_ = Matrix::Identity(d, d) / lambda_;
      gh_ = gram_ * inverse_;
    } else {
      inverse_ = Matrix::Zero(d, d);
      basis_ = Matrix::Zero(d, 0);
    }
    recompute_terms();
  }

  PsiTerms terms() const { return terms_; }

  /// Criterion terms after adding each row of `candidates`.
  std::vector<PsiTerms> scan(const Matrix& candidates) const {
    return lambda_ > 0.0 ? scan_ridge(candidates) : scan_pinv(candidates);
  }

  void commit(const Vector& x, const Matrix& design) {
    if (lambda_ > 0.0) {
      const Vector w = inverse_ * x;
      inverse_ -= w * w.transpose() / (1.0 + x.dot(w));
      inverse_ = 0.5 * (inverse_ + inverse_.transpose());
    } else {
      const Vector z = inverse_ * x;
      const Vector perp = x - basis_ * (basis_.transpose() * x);
      const double beta = perp.norm();
      if (beta > kNewDirectionRatio * x.norm()) {
        const Vector q = perp / beta;
        inverse_ += -(z * q.transpose() + q * z.transpose()) / beta + ((1.0 + x.dot(z)) / (beta * beta)) * q * q.transpose();
        basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
        basis_.col(basis_.cols() - 1) = q;
      } else {
        inverse_ -= z * z.transpose() / (1.0 + x.dot(z));
      }
      inverse_ = 0.5 * (inverse_ + inverse_.transpose());
    }
    if (design.rows() % kRebuildInterval == 0) rebuild(design);
    if (lambda_ > 0.0) gh_ = gram_ * inverse_;
    recompute_terms();
  }

 private:
  void rebuild(const Matrix& design) {
    const Index d = pool_.cols();
    if (lambda_ > 0.0) {
      Matrix shifted = design.transpose() * design;
      shifted.diagonal().array() += lambda_;
      inverse_ = shifted.llt().solve(Matrix::Identity(d, d));
      inverse_ = 0.5 * (inverse_ + inverse_.transpose());
    } else {
      const linalg::RowSpace rs = linalg::row_space(design, d);
      basis_ = rs.basis;
      const Vector inv_s2 = rs.singular_values.array().square().inverse();
      inverse_ = rs.basis * inv_s2.asDiagonal() * rs.basis.transpose();
    }
  }

  void recompute_terms() {
    if (lambda_ > 0.0) {
      const double t1 = gh_.trace();
      const double t2 = gh_.cwiseProduct(inverse_.transpose()).sum();
      terms_.bias = lambda_ * lambda_ * t2;
      terms_.variance = t1 - lambda_ * t2;
    } else {
      const Matrix gq = gram_ * basis_;
      terms_.bias = total_ - basis_.cwiseProduct(gq).sum();
      terms_.variance = gram_.cwiseProduct(inverse_).sum();
    }
  }

  std::vector<PsiTerms> scan_pinv(const Matrix& x) const {
    const Index count = x.rows();
    const Matrix perp = x - (x * basis_) * basis_.transpose();
    const Matrix z = x * inverse_;
    const Matrix gp = perp * gram_;
    const Matrix gz = z * gram_;
    std::vector<PsiTerms> out(static_cast<std::size_t>(count));
    for (Index r = 0; r < count; ++r) {
      const double beta2 = perp.row(r).squaredNorm();
      const double xz = x.row(r).dot(z.row(r));
      PsiTerms next = terms_;
      if (std::sqrt(beta2) > kNewDirectionRatio * x.row(r).norm()) {
        const double qgq = perp.row(r).dot(gp.row(r)) / beta2;
        const double zgq = z.row(r).dot(gp.row(r)) / beta2;
        next.bias -= qgq;
        next.variance += -2.0 * zgq + (1.0 + xz) * qgq / beta2;
      } else {
        next.variance -= z.row(r).dot(gz.row(r)) / (1.0 + xz);
      }
      out[static_cast<std::size_t>(r)] = next;
    }
    return out;
  }

  std::vector<PsiTerms> scan_ridge(const Matrix& x) const {
    const Index count = x.rows();
    const Matrix w = x * inverse_;
    const Matrix gw = w * gram_;
    const Matrix ghw = w * gh_;  // row r: w^T G H
    const double t1 = gh_.trace();
    const double t2 = gh_.cwiseProduct(inverse_.transpose()).sum();
    std::vector<PsiTerms> out(static_cast<std::size_t>(count));
    for (Index r = 0; r < count; ++r) {
      const double delta = 1.0 + x.row(r).dot(w.row(r));
      const double wgw = w.row(r).dot(gw.row(r));
      const double wghw = ghw.row(r).dot(w.row(r));
      const double ww = w.row(r).squaredNorm();
      const double n1 = t1 - wgw / delta;
      const double n2 = t2 - 2.0 * wghw / delta + ww * wgw / (delta * delta);
      out[static_cast<std::size_t>(r)] = PsiTerms{lambda_ * lambda_ * n2, n1 - lambda_ * n2};
    }
    return out;
  }

  const Matrix& pool_;
  double lambda_;
  Matrix gram_;
  double total_ = 0.0;
  Matrix inverse_;
  Matrix basis_;
  Matrix gh_;
  PsiTerms terms_;
};

}  // namespace

DesignResult greedy_features(const PoolMatrix& pool, Index n, const CriterionParams& params,
                             const CandidateOptions& options) {
  params.validate();
  const Index m = pool.rows();
  detail::check_design_request(m, n, options);
  const auto start = std::chrono::steady_clock::now();
  detail::CandidatePicker picker(m, options);
  std::vector<bool> in_design(static_cast<std::size_t>(m), false);
  FeatureState state(pool.data(), params.lambda);
  Matrix design(0, pool.cols());

  DesignResult result;
  result.params = params;
  result.method = params.variance_only() ? "variance-features" : "greedy-features";
  while (static_cast<Index>(result.indices.size()) < n) {
    const auto step_start = std::chrono::steady_clock::now();
    const IndexList candidates = picker.next(in_design);
    if (candidates.empty()) throw DegeneratePoolError(result.indices.size(), "candidate list exhausted");
    const Matrix rows = linalg::select_rows(pool.data(), candidates);
    const std::vector<PsiTerms> scores = state.scan(rows);
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double score = combine_psi(scores[c], params);
      if (c == 0 || score < best_score) {
        best = c;
        best_score = score;
      }
    }
    const Index chosen = candidates[best];
    design.conservativeResize(design.rows() + 1, Eigen::NoChange);
    design.row(design.rows() - 1) = pool.row(chosen);
    state.commit(pool.row(chosen).transpose(), design);
    in_design[static_cast<std::size_t>(chosen)] = true;
    result.indices.push_back(chosen);
    result.scores.push_back(combine_psi(state.terms(), params));
    result.step_seconds.push_back(detail::seconds_since(step_start));
  }
  result.wall_seconds = detail::seconds_since(start);
  return result;
}

}  // namespace oed
