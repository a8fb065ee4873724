#include "oracles.hpp"

#include "oed/criteria.hpp"
#include "oed/error.hpp"
#include "oed/kernels.hpp"
#include "oed/selection.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace oed;

namespace {

GramMatrix linear_gram(const Matrix& v) { return make_gram(PoolMatrix(v), kernel::Linear{}); }

bool scores_close(const std::vector<double>& a, const std::vector<double>& b, double scale, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::fabs(a[k] - b[k]) > tol * std::max({std::fabs(a[k]), std::fabs(b[k]), scale})) return false;
  return true;
}

}  // namespace

TEST_SUITE("selection") {

TEST_CASE("three-point pool picks index 0 first") {
  Matrix v(3, 2);
  v << 2.0, 0.0, 1.0, 0.0, 0.0, 1.0;
  const GramMatrix k = linear_gram(v);
  const CriterionParams p{0.0, 0.0};
  CHECK(greedy_naive(k, 1, p).indices == IndexList{0});
  CHECK(greedy_fast(k, 1, p).indices == IndexList{0});
  CHECK(greedy_fast(k, 1, p).scores.front() == doctest::Approx(-5.0));
}

TEST_CASE("n = m on an invertible Gram selects everything and ends at -Tr(K)") {
  Rng rng(40);
  const GramMatrix k = linear_gram(rng.normal_matrix(8, 12));
  for (auto* select : {&greedy_naive, &greedy_fast}) {
    const DesignResult r = select(k, 8, {0.0, 0.0}, {});
    IndexList sorted = r.indices;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == IndexList{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(r.scores.back() == doctest::Approx(-k.trace()).epsilon(1e-9));
  }
}

TEST_CASE("greedy matches a brute-force per-step argmin") {
  Rng rng(41);
  const Matrix v = oracle::random_pool(rng, 20, 10);
  const GramMatrix k = linear_gram(v);
  const double floor = schur_floor(k);
  const IndexList expect = oracle::brute_force_greedy(k.data(), 5, 0.5, 0.25, floor);
  CHECK(greedy_naive(k, 5, {0.5, 0.25}).indices == expect);
  CHECK(greedy_fast(k, 5, {0.5, 0.25}).indices == expect);
}

TEST_CASE("fast and naive greedy agree across parameter shapes") {
  Rng rng(42);
  for (int trial = 0; trial < 6; ++trial) {
    const Index m = 20 + 15 * trial;
    const Matrix v = oracle::random_pool(rng, m, 24);
    const GramMatrix k = trial % 2 ? make_gram(PoolMatrix(v), kernel::Rbf{0.05}) : linear_gram(v);
    for (double lambda : {0.0, 0.5625, 1.0}) {
      for (double t : {0.0, lambda, 0.5, CriterionParams::kInfinity}) {
        const DesignResult naive = greedy_naive(k, 10, {lambda, t});
        const DesignResult fast = greedy_fast(k, 10, {lambda, t});
        CHECK(naive.indices == fast.indices);
        CHECK(scores_close(naive.scores, fast.scores, 0.0, 1e-7));
      }
    }
  }
}

TEST_CASE("fast greedy caches stay coherent after every commit") {
  Rng rng(43);
  const Matrix v = oracle::random_pool(rng, 60, 50);
  const GramMatrix k = linear_gram(v);
  for (const CriterionParams& p : {CriterionParams{0.0, 0.0}, CriterionParams{0.5625, 0.5},
                                   CriterionParams{1.0, CriterionParams::kInfinity}}) {
    DesignState state(k, p, 40);
    const IndexList order = greedy_fast(k, 40, p).indices;
    for (Index i : order) {
      state.commit(i);
      const DesignState::Coherence c = state.coherence();
      CHECK(c.inverse_residual < 1e-7);
      CHECK(c.cross_gram < 1e-9);
      CHECK(c.products < 1e-7);
      CHECK(c.columns < 1e-7);
      CHECK(c.score < 1e-7);
    }
  }
}

TEST_CASE("candidate evaluation predicts the committed score") {
  Rng rng(44);
  const GramMatrix k = linear_gram(oracle::random_pool(rng, 30, 20));
  DesignState state(k, {0.5625, 0.5625}, 6);
  for (Index i : {3, 17, 8}) {
    const DesignState::Candidate c = state.evaluate(i);
    REQUIRE(c.admissible);
    state.commit(i);
    CHECK(state.score() == doctest::Approx(c.score).epsilon(1e-10));
  }
}

TEST_CASE("dependent candidates are skipped and exhaustion is reported") {
  Matrix v(4, 2);
  v << 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  const GramMatrix k = linear_gram(v);
  for (auto* select : {&greedy_naive, &greedy_fast}) {
    const DesignResult two = select(k, 2, {0.0, 0.0}, {});
    CHECK(two.indices.size() == 2);
    try {
      select(k, 3, {0.0, 0.0}, {});
      FAIL("expected a degenerate-pool error");
    } catch (const DegeneratePoolError& e) {
      CHECK(e.achieved() == 2);
    }
  }
  CHECK(greedy_fast(k, 4, {0.1, 0.0}).indices.size() == 4);
}

TEST_CASE("exact ties at span completion go to the lowest index") {
  // Once d - 1 rows are chosen, every remaining row completes the span and
  // leaves zero residual, so the last step is an exact tie.
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 4 + trial % 5;
    const Matrix v = rng.normal_matrix(30, d);
    const GramMatrix k = linear_gram(v);
    for (const DesignResult& r : {greedy_fast(k, d, {0.0, 0.0}), greedy_naive(k, d, {0.0, 0.0})}) {
      Index lowest = 0;
      while (std::find(r.indices.begin(), r.indices.end() - 1, lowest) != r.indices.end() - 1) ++lowest;
      CHECK(r.indices.back() == lowest);
      CHECK(std::fabs(k.trace() + r.scores.back()) <= 1e-9);
    }
  }
}

TEST_CASE("request validation") {
  const GramMatrix k(Matrix::Identity(3, 3));
  CHECK_THROWS_AS(greedy_fast(k, 0, {0.0, 0.0}), InputError);
  CHECK_THROWS_AS(greedy_fast(k, 4, {0.0, 0.0}), InputError);
  CandidateOptions bad;
  bad.candidates = IndexList{0, 7};
  CHECK_THROWS_AS(greedy_fast(k, 1, {0.0, 0.0}, bad), InputError);
}

TEST_CASE("candidate restriction and subsampling") {
  Rng rng(45);
  const GramMatrix k = linear_gram(oracle::random_pool(rng, 40, 30));
  CandidateOptions only;
  only.candidates = IndexList{5, 9, 13, 21, 30, 33};
  const DesignResult r = greedy_fast(k, 4, {0.0, 0.0}, only);
  for (Index i : r.indices) CHECK(std::find(only.candidates->begin(), only.candidates->end(), i) != only.candidates->end());
  CHECK(r.indices == greedy_naive(k, 4, {0.0, 0.0}, only).indices);

  CandidateOptions sub;
  sub.subsample = 7;
  sub.seed = 99;
  const DesignResult a = greedy_fast(k, 6, {0.5, 0.0}, sub);
  CHECK(a.indices == greedy_fast(k, 6, {0.5, 0.0}, sub).indices);
  CHECK(a.indices == greedy_naive(k, 6, {0.5, 0.0}, sub).indices);
}

TEST_CASE("bias-only greedy maximizes the Nystrom trace") {
  Rng rng(46);
  const GramMatrix k = make_gram(PoolMatrix(oracle::random_pool(rng, 50, 6)), kernel::Rbf{0.3});
  const DesignResult r = greedy_fast(k, 8, {0.0, 0.0});
  for (std::size_t n = 1; n <= r.indices.size(); ++n) {
    const IndexList s(r.indices.begin(), r.indices.begin() + static_cast<long>(n));
    const Index q = static_cast<Index>(n);
    Matrix kss(q, q), ks(k.size(), q);
    for (Index b = 0; b < q; ++b) {
      ks.col(b) = k.data().col(s[b]);
      for (Index a = 0; a < q; ++a) kss(a, b) = k(s[a], s[b]);
    }
    const double nystrom = (ks * kss.ldlt().solve(ks.transpose())).trace();
    CHECK(std::fabs(r.scores[n - 1] + nystrom) <= 1e-9 * std::max(nystrom, 1.0));
  }
}

TEST_CASE("selection is equivariant under pool permutation") {
  Rng rng(47);
  const Matrix v = oracle::random_pool(rng, 40, 25);
  const IndexList perm = oracle::random_subset(rng, 40, 40);
  Matrix pv(40, 25);
  for (Index i = 0; i < 40; ++i) pv.row(i) = v.row(perm[static_cast<std::size_t>(i)]);
  for (const CriterionParams& p : {CriterionParams{0.0, 0.0}, CriterionParams{0.5, 0.5}}) {
    const IndexList a = greedy_fast(linear_gram(v), 10, p).indices;
    const IndexList b = greedy_fast(linear_gram(pv), 10, p).indices;
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(perm[static_cast<std::size_t>(b[k])] == a[k]);
  }
}

TEST_CASE("bias-only selection is invariant under scaling K") {
  Rng rng(48);
  const Matrix v = oracle::random_pool(rng, 40, 25);
  const GramMatrix k = linear_gram(v);
  const DesignResult base = greedy_fast(k, 10, {0.0, 0.0});
  for (double c : {1e-3, 1e3}) {
    const DesignResult scaled = greedy_fast(GramMatrix(c * k.data()), 10, {0.0, 0.0});
    CHECK(scaled.indices == base.indices);
    CHECK(scaled.scores.back() == doctest::Approx(c * base.scores.back()).epsilon(1e-9));
  }
}

TEST_CASE("variance-only selection") {
  Matrix v(3, 2);
  const double h = 1.0 / std::sqrt(2.0);
  v << 1.0, 0.0, 0.0, 1.0, h, h;
  const GramMatrix k = linear_gram(v);
  const DesignResult r = select_variance_only(k, 2, 0.0);
  const IndexList expect = oracle::brute_force_greedy(k.data(), 2, 0.0, CriterionParams::kInfinity, schur_floor(k));
  CHECK(r.indices == expect);
  CHECK(r.indices == greedy_fast(k, 2, {0.0, CriterionParams::kInfinity}).indices);
  CHECK(r.method == "variance");
}

TEST_CASE("feature-space greedy matches the kernel greedy") {
  Rng rng(49);
  const Matrix v = oracle::random_pool(rng, 45, 20);
  const GramMatrix k = linear_gram(v);
  for (const CriterionParams& p : {CriterionParams{0.0, 0.0}, CriterionParams{0.0, 0.04},
                                   CriterionParams{0.0, CriterionParams::kInfinity}, CriterionParams{0.5, 0.5},
                                   CriterionParams{0.3, CriterionParams::kInfinity}}) {
    const DesignResult kern = greedy_fast(k, 15, p);
    const DesignResult feat = greedy_features(PoolMatrix(v), 15, p);
    CHECK(kern.indices == feat.indices);
    for (std::size_t s = 0; s < feat.scores.size(); ++s) {
      const IndexList prefix(feat.indices.begin(), feat.indices.begin() + static_cast<long>(s + 1));
      const double expect = oracle::psi_bar(v, prefix, p.lambda, p.t);
      CHECK(oracle::rel_diff(feat.scores[s], expect, std::max(std::fabs(expect), 1e-6 * v.squaredNorm())) < 1e-7);
    }
  }
}

TEST_CASE("feature-space greedy continues past n = d") {
  Rng rng(50);
  const Matrix v = oracle::random_pool(rng, 80, 10);
  for (const CriterionParams& p : {CriterionParams{0.0, 0.04}, CriterionParams{0.0, CriterionParams::kInfinity}}) {
    const DesignResult r = greedy_features(PoolMatrix(v), 70, p);
    CHECK(r.indices.size() == 70);
    std::vector<Index> sorted = r.indices;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    for (std::size_t s : {5u, 9u, 10u, 11u, 33u, 69u}) {
      const IndexList prefix(r.indices.begin(), r.indices.begin() + static_cast<long>(s + 1));
      const double expect = oracle::psi_bar(v, prefix, p.lambda, p.t);
      CHECK(oracle::rel_diff(r.scores[s], expect, std::max(std::fabs(expect), 1e-9)) < 1e-6);
    }
    // Each step is the argmin of the literal criterion.
    for (std::size_t s : {3u, 10u, 40u}) {
      IndexList prefix(r.indices.begin(), r.indices.begin() + static_cast<long>(s));
      Index best = -1;
      double best_score = 0.0;
      for (Index i = 0; i < 80; ++i) {
        if (std::find(prefix.begin(), prefix.end(), i) != prefix.end()) continue;
        IndexList trial = prefix;
        trial.push_back(i);
        const double score = oracle::psi_bar(v, trial, p.lambda, p.t);
        if (best < 0 || score < best_score) best = i, best_score = score;
      }
      CHECK(best == r.indices[s]);
    }
  }
}

TEST_CASE("random designs") {
  const DesignResult all = select_random(12, 12, 5);
  IndexList sorted = all.indices;
  std::sort(sorted.begin(), sorted.end());
  IndexList expect(12);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
  CHECK(select_random(100, 10, 1).indices == select_random(100, 10, 1).indices);
  CHECK(select_random(100, 10, 1).indices != select_random(100, 10, 2).indices);
  CHECK(select_random(100, 10, 1).seed == 1u);
}

TEST_CASE("k-centers on two distinct points selects both") {
  Matrix v(2, 1);
  v << 0.0, 5.0;
  IndexList r = select_k_centers(PoolMatrix(v), 2, 3).indices;
  std::sort(r.begin(), r.end());
  CHECK(r == IndexList{0, 1});
}

TEST_CASE("k-centers draws proportionally to squared distance") {
  // From center 0 on the line {0, 1, 10}: weights 1 and 100.
  Matrix v(3, 1);
  v << 0.0, 1.0, 10.0;
  int from_zero = 0, far = 0;
  for (std::uint64_t seed = 0; seed < 6000; ++seed) {
    const IndexList r = select_k_centers(PoolMatrix(v), 2, seed).indices;
    if (r[0] != 0) continue;
    ++from_zero;
    if (r[1] == 2) ++far;
  }
  REQUIRE(from_zero > 1000);
  const double p = 100.0 / 101.0;
  const double se = std::sqrt(p * (1.0 - p) / from_zero);
  CHECK(std::fabs(static_cast<double>(far) / from_zero - p) < 4.0 * se);
  CHECK(far < from_zero);
}

TEST_CASE("k-centers falls back to uniform over duplicates") {
  Matrix v = Matrix::Ones(5, 2);
  const IndexList r = select_k_centers(PoolMatrix(v), 5, 8).indices;
  IndexList sorted = r;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == IndexList{0, 1, 2, 3, 4});
  CHECK(select_k_centers(PoolMatrix(v), 3, 8).indices == select_k_centers(PoolMatrix(v), 3, 8).indices);
}

TEST_CASE("k-centers designs satisfy the pool-normalized coverage bound") {
  Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix v = rng.normal_matrix(30, 4);
    const IndexList s = select_k_centers(PoolMatrix(v), 6, static_cast<std::uint64_t>(trial)).indices;
    const double delta = coverage_radius(v, s);
    CHECK(std::fabs(delta - oracle::coverage_radius(v, s)) < 1e-12);
    CHECK(psi_bar(PoolMatrix(v), s, {0.0, 0.0}) / 30.0 <= delta * delta + 1e-12);
  }
}

TEST_CASE("uncertainty scores") {
  Matrix one(1, 1);
  one << 1.0;
  CHECK(uncertainty_scores(one, 1)(0) == doctest::Approx(0.60105772).epsilon(1e-8));

  Matrix mid(1, 2);
  mid << 0.5, 0.5;
  const double p = std::pow(2.0 * 3.14159265358979323846, -1.0) * std::exp(-0.25);
  CHECK(uncertainty_scores(mid, 2)(0) == doctest::Approx(1.0 - p).epsilon(1e-12));

  Matrix far(1, 3);
  far << 1e3, -1e3, 5e2;
  CHECK(uncertainty_scores(far, 3)(0) == 1.0);
  CHECK_THROWS_AS(uncertainty_scores(far, 2), InputError);
}

}  // TEST_SUITE
