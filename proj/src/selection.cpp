#include "oed/selection.hpp"

#include "candidates.hpp"
#include "oed/criteria.hpp"
#include "oed/error.hpp"
#include "oed/linalg.hpp"
#include "oed/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace oed {

namespace detail {

void check_design_request(Index m, Index n, const CandidateOptions& options) {
  if (n < 1 || n > m) {
    std::ostringstream msg;
    msg << "design size " << n << " must lie in [1, " << m << "]";
    throw InputError(msg.str());
  }
  if (options.candidates) {
    for (Index i : *options.candidates)
      if (i < 0 || i >= m) throw InputError("candidate index outside the pool");
  }
  if (options.subsample && *options.subsample < 1) throw InputError("subsample size must be positive");
}

}  // namespace detail

namespace {

constexpr Index kRefreshInterval = 32;
// Relative width of the window in which two scores count as tied.
constexpr double kTieWindow = 1e-8;

/// Running argmin over candidates scanned in ascending index order. A later
/// candidate replaces the incumbent only if it is lower by more than the tie
/// window, so rounding noise cannot decide between exactly tied candidates
/// (it tends to favour the worst-conditioned one).
class TieBreakingArgmin {
 public:
  explicit TieBreakingArgmin(double scale) : scale_(scale) {}

  void offer(Index i, double score) {
    if (best_ < 0 || score < score_ - kTieWindow * std::max(scale_, std::fabs(score_))) {
      best_ = i;
      score_ = score;
    }
  }

  Index best() const { return best_; }
  double score() const { return score_; }

 private:
  double scale_;
  Index best_ = -1;
  double score_ = 0.0;
};

[[noreturn]] void throw_exhausted(std::size_t achieved, Index requested) {
  std::ostringstream msg;
  msg << "no admissible candidate left: design stopped at size " << achieved << " of " << requested;
  throw DegeneratePoolError(achieved, msg.str());
}

double max_relative(const Matrix& cached, const Matrix& fresh) {
  if (fresh.size() == 0) return 0.0;
  const double scale = std::max(fresh.cwiseAbs().maxCoeff(), 1e-300);
  return (cached - fresh).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

DesignState::DesignState(const GramMatrix& gram, const CriterionParams& params, Index capacity)
    : gram_(&gram), params_(params), capacity_(capacity), floor_(schur_floor(gram)) {
  params_.validate();
  const Index m = gram.size();
  in_design_.assign(static_cast<std::size_t>(m), false);
  column_sq_norms_ = gram.data().colwise().squaredNorm().transpose();
  for (Matrix* mat : {&a_, &b_, &c_, &d_, &e_}) mat->setZero(capacity, capacity);
  for (Matrix* mat : {&rows_, &kk_, &p1_, &p2_, &p3_}) mat->setZero(capacity, m);
}

DesignState::Candidate DesignState::evaluate(Index i) const {
  const Index s = size();
  const auto k = rows_.col(i).head(s);
  const auto a = p1_.col(i).head(s);
  Candidate out;
  out.schur = (*gram_)(i, i) + params_.lambda - k.dot(a);
  if (!(out.schur > floor_)) return out;
  out.admissible = true;
  const double r = 1.0 / out.schur;
  const auto c = kk_.col(i).head(s);
  const auto ba = p2_.col(i).head(s);
  const auto g = p3_.col(i).head(s);
  const double ca = c.dot(a);
  // |K_{:,S} a - K_{:,i}|^2, the new-column part of Tr(BA).
  const double residual = a.dot(ba) - 2.0 * ca + column_sq_norms_(i);
  const double hg = ba.dot(g) - c.dot(g);
  const double aa = a.squaredNorm();
  KernelTraces traces;
  traces.tr_ba = tr_c_ + r * residual;
  traces.tr_ba2 = tr_d_ + 2.0 * r * hg + r * r * (aa + 1.0) * residual;
  out.score = combine_traces(traces, params_);
  return out;
}

void DesignState::commit(Index i) {
  const Index s = size();
  if (s >= capacity_) throw InputError("design state capacity exceeded");
  if (is_selected(i)) throw InputError("index already selected");
  const Matrix& k_full = gram_->data();
  const Vector k = rows_.col(i).head(s);
  const Vector a = p1_.col(i).head(s);
  const double schur = k_full(i, i) + params_.lambda - k.dot(a);
  if (!(schur > floor_)) throw DegenerateSubsetError(static_cast<std::size_t>(i), "committed candidate is degenerate");
  const double r = 1.0 / schur;
  const Vector c = kk_.col(i).head(s);
  const double gamma = column_sq_norms_(i);
  const Vector ba = p2_.col(i).head(s);
  const Vector g = p3_.col(i).head(s);
  const Vector h = ba - c;
  const double eta = c.dot(a) - gamma;
  const double aa1 = a.squaredNorm() + 1.0;

  // u = (a, -1); z = u^T K_{S+i,:}
  const Vector z = rows_.topRows(s).transpose() * a - k_full.col(i);
  const Vector q = p1_.topRows(s).transpose() * a;   // (A K_{S,:})^T a
  const Vector cp = p1_.topRows(s).transpose() * c;  // (A K_{S,:})^T c
  const Vector ac = a_.topLeftCorner(s, s) * c;
  const Vector ec = e_.topLeftCorner(s, s) * c;
  const Vector ca_vec = c_.topLeftCorner(s, s) * a;  // B A a
  const double cg = c.dot(g);

  auto a_blk = a_.topLeftCorner(s + 1, s + 1);
  auto b_blk = b_.topLeftCorner(s + 1, s + 1);
  auto c_blk = c_.topLeftCorner(s + 1, s + 1);
  auto d_blk = d_.topLeftCorner(s + 1, s + 1);
  auto e_blk = e_.topLeftCorner(s + 1, s + 1);

  Vector u(s + 1);
  u << a, -1.0;
  Vector g_ext = Vector::Zero(s + 1);
  g_ext.head(s) = g;
  Vector hb(s + 1);
  hb << h, eta;  // B_new u

  // A_new = [A 0; 0 0] + r u u^T
  a_blk.noalias() += r * u * u.transpose();

  // B_new borders B with c and gamma.
  b_blk.col(s).head(s) = c;
  b_blk.row(s).head(s) = c.transpose();
  b_blk(s, s) = gamma;

  // C_new = [C 0; (A c)^T 0] + r (B_new u) u^T
  c_blk.row(s).head(s) = ac.transpose();
  c_blk.noalias() += r * hb * u.transpose();

  // E_new = [E 0; 0 0] + r (g~ u^T + u g~^T) + r^2 (a.a + 1) u u^T
  e_blk.noalias() += r * (g_ext * u.transpose() + u * g_ext.transpose()) + (r * r * aa1) * u * u.transpose();

  // D_new = B_new E_new = [D 0; (E c)^T 0] + r (B_new g~) u^T + r (B_new u) g~^T + r^2 (a.a + 1) (B_new u) u^T
  Vector bg(s + 1);
  bg << ca_vec, cg;
  d_blk.row(s).head(s) = ec.transpose();
  d_blk.noalias() += r * bg * u.transpose() + r * hb * g_ext.transpose() + (r * r * aa1) * hb * u.transpose();

  // Per-candidate columns; the new row index is s.
  p3_.topRows(s).noalias() += r * g * z.transpose() + r * a * q.transpose() + (r * r * aa1) * a * z.transpose();
  p3_.row(s) = -r * q.transpose() - (r * r * aa1) * z.transpose();
  p2_.topRows(s).noalias() += r * h * z.transpose();
  p2_.row(s) = cp.transpose() + r * eta * z.transpose();
  p1_.topRows(s).noalias() += r * a * z.transpose();
  p1_.row(s) = -r * z.transpose();
  rows_.row(s) = k_full.row(i);
  kk_.row(s).noalias() = (k_full * k_full.col(i)).transpose();

  selected_.push_back(i);
  in_design_[static_cast<std::size_t>(i)] = true;
  tr_c_ = c_blk.trace();
  tr_d_ = d_blk.trace();
  score_ = combine_traces(KernelTraces{tr_c_, tr_d_}, params_);
}

void DesignState::refresh() {
  const Index s = size();
  if (s == 0) return;
  const Matrix& k_full = gram_->data();
  Matrix rows(s, gram_->size());
  for (Index p = 0; p < s; ++p) rows.row(p) = k_full.row(selected_[p]);
  Matrix shifted(s, s);
  for (Index p = 0; p < s; ++p)
    for (Index q = 0; q < s; ++q) shifted(p, q) = k_full(selected_[p], selected_[q]);
  shifted.diagonal().array() += params_.lambda;
  Matrix lower;
  if (linalg::cholesky_lower(shifted, 0.0, lower))
    throw DegenerateSubsetError(static_cast<std::size_t>(selected_.back()), "selection became singular on refresh");
  const Matrix a = linalg::inverse_from_cholesky(lower);
  const Matrix b = rows * rows.transpose();
  const Matrix e = a * a;
  a_.topLeftCorner(s, s) = a;
  b_.topLeftCorner(s, s) = b;
  c_.topLeftCorner(s, s) = b * a;
  d_.topLeftCorner(s, s) = b * e;
  e_.topLeftCorner(s, s) = e;
  rows_.topRows(s) = rows;
  kk_.topRows(s).noalias() = rows * k_full;
  p1_.topRows(s).noalias() = a * rows;
  p2_.topRows(s).noalias() = c_.topLeftCorner(s, s) * rows;
  p3_.topRows(s).noalias() = e * rows;
  tr_c_ = c_.topLeftCorner(s, s).trace();
  tr_d_ = d_.topLeftCorner(s, s).trace();
  score_ = combine_traces(KernelTraces{tr_c_, tr_d_}, params_);
}

DesignState::Coherence DesignState::coherence() const {
  Coherence out;
  const Index s = size();
  if (s == 0) return out;
  DesignState fresh(*gram_, params_, s);
  fresh.selected_ = selected_;
  fresh.in_design_ = in_design_;
  fresh.refresh();

  Matrix shifted(s, s);
  for (Index p = 0; p < s; ++p)
    for (Index q = 0; q < s; ++q) shifted(p, q) = (*gram_)(selected_[p], selected_[q]);
  shifted.diagonal().array() += params_.lambda;
  out.inverse_residual = (inverse() * shifted - Matrix::Identity(s, s)).cwiseAbs().maxCoeff();
  out.cross_gram = max_relative(cross_gram(), fresh.cross_gram());
  out.products = std::max({max_relative(c_cache(), fresh.c_cache()), max_relative(d_cache(), fresh.d_cache()),
                           max_relative(e_cache(), fresh.e_cache())});
  out.columns = std::max({max_relative(rows_.topRows(s), fresh.rows_), max_relative(kk_.topRows(s), fresh.kk_),
                          max_relative(p1_.topRows(s), fresh.p1_), max_relative(p2_.topRows(s), fresh.p2_),
                          max_relative(p3_.topRows(s), fresh.p3_)});
  const double exact = j_criterion(*gram_, selected_, params_);
  out.score = std::fabs(score_ - exact) / std::max(std::fabs(exact), 1e-300);
  return out;
}

DesignResult greedy_naive(const GramMatrix& gram, Index n, const CriterionParams& params,
                          const CandidateOptions& options) {
  params.validate();
  const Index m = gram.size();
  detail::check_design_request(m, n, options);
  const auto start = std::chrono::steady_clock::now();
  const double floor = schur_floor(gram);
  detail::CandidatePicker picker(m, options);
  std::vector<bool> in_design(static_cast<std::size_t>(m), false);

  DesignResult result;
  result.params = params;
  result.method = "greedy-naive";
  IndexList trial;
  while (static_cast<Index>(result.indices.size()) < n) {
    const auto step_start = std::chrono::steady_clock::now();
    TieBreakingArgmin argmin(gram.trace());
    trial = result.indices;
    trial.push_back(0);
    for (Index i : picker.next(in_design)) {
      trial.back() = i;
      const KernelEvaluation eval = evaluate_kernel_criterion(gram, trial, params.lambda, floor);
      if (eval.traces) argmin.offer(i, combine_traces(*eval.traces, params));
    }
    const Index best = argmin.best();
    if (best < 0) throw_exhausted(result.indices.size(), n);
    result.indices.push_back(best);
    result.scores.push_back(argmin.score());
    in_design[static_cast<std::size_t>(best)] = true;
    result.step_seconds.push_back(detail::seconds_since(step_start));
  }
  result.wall_seconds = detail::seconds_since(start);
  return result;
}

DesignResult greedy_fast(const GramMatrix& gram, Index n, const CriterionParams& params,
                         const CandidateOptions& options) {
  params.validate();
  const Index m = gram.size();
  detail::check_design_request(m, n, options);
  const auto start = std::chrono::steady_clock::now();
  DesignState state(gram, params, n);
  detail::CandidatePicker picker(m, options);
  std::vector<bool> in_design(static_cast<std::size_t>(m), false);

  DesignResult result;
  result.params = params;
  result.method = "greedy";
  while (state.size() < n) {
    const auto step_start = std::chrono::steady_clock::now();
    TieBreakingArgmin argmin(gram.trace());
    for (Index i : picker.next(in_design)) {
      const DesignState::Candidate cand = state.evaluate(i);
      if (cand.admissible) argmin.offer(i, cand.score);
    }
    const Index best = argmin.best();
    if (best < 0) throw_exhausted(state.selected().size(), n);
    state.commit(best);
    if (state.size() % kRefreshInterval == 0) state.refresh();
    in_design[static_cast<std::size_t>(best)] = true;
    result.indices.push_back(best);
    result.scores.push_back(state.score());
    result.step_seconds.push_back(detail::seconds_since(step_start));
  }
  result.wall_seconds = detail::seconds_since(start);
  return result;
}

DesignResult select_variance_only(const GramMatrix& gram, Index n, double lambda, const CandidateOptions& options) {
  DesignResult result = greedy_fast(gram, n, CriterionParams{lambda, CriterionParams::kInfinity}, options);
  result.method = "variance";
  return result;
}

DesignResult select_random(Index m, Index n, std::uint64_t seed) {
  detail::check_design_request(m, n, {});
  const auto start = std::chrono::steady_clock::now();
  Rng rng(seed);
  IndexList order(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  for (Index j = 0; j < n; ++j) {
    const auto pick = j + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(m - j)));
    std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick)]);
  }
  order.resize(static_cast<std::size_t>(n));
  DesignResult result;
  result.indices = std::move(order);
  result.scores.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  result.method = "random";
  result.seed = seed;
  result.wall_seconds = detail::seconds_since(start);
  return result;
}

DesignResult select_k_centers(const PoolMatrix& pool, Index n, std::uint64_t seed) {
  const Index m = pool.rows();
  detail::check_design_request(m, n, {});
  const auto start = std::chrono::steady_clock::now();
  Rng rng(seed);
  const Matrix points = pool.data().transpose();
  Vector nearest = Vector::Constant(m, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(static_cast<std::size_t>(m), false);

  DesignResult result;
  result.method = "kcenters";
  result.seed = seed;
  Index next = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(m)));
  for (;;) {
    const auto step_start = std::chrono::steady_clock::now();
    chosen[static_cast<std::size_t>(next)] = true;
    result.indices.push_back(next);
    for (Index i = 0; i < m; ++i)
      nearest(i) = std::min(nearest(i), (points.col(i) - points.col(next)).squaredNorm());
    result.step_seconds.push_back(detail::seconds_since(step_start));
    if (static_cast<Index>(result.indices.size()) == n) break;

    double total = 0.0;
    Index remaining = 0;
    for (Index i = 0; i < m; ++i) {
      if (chosen[static_cast<std::size_t>(i)]) continue;
      total += nearest(i);
      ++remaining;
    }
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      next = -1;
      Index last_positive = -1;
      for (Index i = 0; i < m; ++i) {
        if (chosen[static_cast<std::size_t>(i)] || nearest(i) <= 0.0) continue;
        last_positive = i;
        running += nearest(i);
        if (target < running) {
          next = i;
          break;
        }
      }
      if (next < 0) next = last_positive;
    } else {
      auto pick = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(remaining)));
      for (Index i = 0; i < m; ++i) {
        if (chosen[static_cast<std::size_t>(i)]) continue;
        if (pick-- == 0) {
          next = i;
          break;
        }
      }
    }
  }
  result.scores.assign(result.indices.size(), std::numeric_limits<double>::quiet_NaN());
  result.wall_seconds = detail::seconds_since(start);
  return result;
}

Vector uncertainty_scores(const Matrix& predictions, int labels) {
  if (labels < 1 || predictions.cols() != labels) throw InputError("prediction rows must have one entry per label");
  const double normalizer = std::pow(2.0 * std::numbers::pi, -0.5 * labels);
  Vector scores(predictions.rows());
  for (Index r = 0; r < predictions.rows(); ++r) {
    const double norm2 = predictions.row(r).squaredNorm();
    double best = 0.0;
    for (int i = 0; i < labels; ++i) {
      const double dist2 = norm2 - 2.0 * predictions(r, i) + 1.0;
      best = std::max(best, normalizer * std::exp(-0.5 * dist2));
    }
    scores(r) = 1.0 - best;
  }
  return scores;
}

double coverage_radius(const Matrix& pool, const IndexList& selected) {
  if (selected.empty()) throw InputError("coverage radius needs at least one selected point");
  double radius2 = 0.0;
  for (Index i = 0; i < pool.rows(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Index j : selected) nearest = std::min(nearest, (pool.row(i) - pool.row(j)).squaredNorm());
    radius2 = std::max(radius2, nearest);
  }
  return std::sqrt(radius2);
}

}  // namespace oed
