#pragma once

#include "oed/kernels.hpp"
#include "oed/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace oed {

/// One (method, n, repetition) measurement.
struct CurveRow {
  std::string method;
  Index n = 0;
  std::uint64_t seed = 0;  // repetition id
  double mse = 0.0;
};

/// Selection recorded for one method and repetition; the design at size n is
/// the first n indices.
struct RecordedDesign {
  std::string method;
  std::uint64_t seed = 0;
  IndexList indices;
};

struct CurveTable {
  std::vector<CurveRow> rows;
  std::vector<RecordedDesign> designs;
};

/// Writes "method,n,seed,mse" followed by one line per row, LF endings.
void write_curves_csv(const CurveTable& table, std::ostream& out);
void write_curves_csv(const CurveTable& table, const std::string& path);

/// Median MSE of `method` at size n over all repetitions; NaN when absent.
double median_mse(const CurveTable& table, const std::string& method, Index n);

/// Synthetic linear-regression setup of the double-descent experiment:
/// w ~ N(0, I_d), x ~ N(0, Sigma) with Sigma_ii = exp(-2.5 i / d), targets
/// y = x^T w + noise with noise ~ N(0, sigma^2).
struct ExperimentConfig {
  std::uint64_t seed = 0;
  Index d = 100;
  Index pool = 500;
  Index test = 100;
  double sigma = 0.2;
  std::vector<Index> sizes;  // empty means 1..max_n
  Index max_n = 120;
  Index repetitions = 20;
  int sigma_index_base = 1;  // i runs over {base, ..., base + d - 1}
  std::vector<std::string> methods = {"random", "classical-oed", "overparam-oed"};
  unsigned threads = 0;  // 0 = hardware concurrency

  /// Throws InputError on an inconsistent configuration.
  void validate() const;
  std::vector<Index> design_sizes() const;
};

struct SyntheticInstance {
  Matrix pool;
  Vector pool_targets;
  Matrix test;
  Vector test_targets;
  Vector w;
  Vector sigma_diag;
  std::uint64_t design_seed = 0;  // seeds the random arm
};

/// The instance of repetition `repetition`, drawn from substream
/// Rng::stream(config.seed, repetition).
SyntheticInstance make_synthetic_instance(const ExperimentConfig& config, std::uint64_t repetition);

/// Selects the design of one method on an instance (size max design size).
/// Methods: "random", "classical-oed" (variance factor, lambda = 0) and
/// "overparam-oed" (lambda = 0, t = sigma^2).
IndexList double_descent_design(const ExperimentConfig& config, const SyntheticInstance& instance,
                                const std::string& method);

/// Nested designs per method and repetition; after each size in
/// design_sizes() the minimum-norm least-squares fit is scored on the test
/// set. Repetitions run in parallel, output order is fixed.
CurveTable run_double_descent(const ExperimentConfig& config);

/// Greedy designs on a kernel, scored with kernel ridge regression.
struct KernelDesignConfig {
  std::string pool_path;
  std::string labels_path;
  std::string test_pool_path;
  std::string test_labels_path;
  bool header = false;
  std::optional<int> classes;
  /// A precomputed kernel file holds the Gram over the pool rows followed by
  /// the test rows.
  KernelSpec kernel = kernel::Rbf{};
  std::vector<CriterionParams> params;
  std::vector<Index> sizes;
  std::optional<Index> subsample;
  bool include_random = false;
  std::uint64_t seed = 0;
  /// Receives warnings such as a design stopping early.
  std::function<void(const std::string&)> warn;
};

/// Parses "lambda:t,lambda:t,..." where t may be "inf".
std::vector<CriterionParams> parse_params_list(const std::string& text);
std::string params_label(const CriterionParams& params);

/// Method column: "greedy:lambda=<l>:t=<t>" per params, plus "random".
/// The seed column is 0 for greedy arms and config.seed for the random arm.
CurveTable run_kernel_design(const KernelDesignConfig& config);

/// Same measurements on kernels already in memory: the pool Gram and the
/// test-by-pool cross kernel.
CurveTable run_kernel_design(const GramMatrix& pool_gram, const Matrix& test_cross, const Matrix& pool_targets,
                             const Matrix& test_targets, const KernelDesignConfig& config);

/// Comparison of the bias-only (t = 0) and transductive (t = lambda)
/// designs on small classification datasets.
struct TStudyDataset {
  std::string name;
  Matrix features;
  std::vector<int> class_ids;
};

/// Features then an integer class id in the last column, one header line.
TStudyDataset read_labeled_dataset(const std::string& path, const std::string& name);

struct TStudyConfig {
  std::vector<double> lambdas = {0.001, 0.01, 0.1, 1.0, 10.0};
  Index n = 50;
  double tie_margin = 0.05;
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> warn;
};

enum class Verdict { TransductiveBetter, BiasOnlyBetter, Same };

/// SAME when |e_a - e_b| < margin * max(e_a, e_b) (both zero counts as SAME).
Verdict compare_errors(double transductive_error, double bias_only_error, double margin);

struct TStudyOutcome {
  std::string dataset;
  double lambda = 0.0;
  double transductive_error = 0.0;
  double bias_only_error = 0.0;
  Verdict verdict = Verdict::Same;
};

struct TStudyCounts {
  double lambda = 0.0;
  int transductive_better = 0;
  int bias_only_better = 0;
  int same = 0;
};

struct TStudySummary {
  std::vector<TStudyOutcome> outcomes;
  std::vector<TStudyCounts> counts;  // one per lambda, in input order
};

/// Each dataset is split in half (seeded) into pool and test, standardized
/// with pool statistics, and used with an RBF kernel of gamma = 1 / features.
/// Datasets with fewer than n + 1 pool points are skipped with a warning.
TStudySummary run_t_study(const std::vector<TStudyDataset>& datasets, const TStudyConfig& config);

/// "lambda,transductive_better,bias_only_better,same", one line per lambda.
void write_t_study_csv(const TStudySummary& summary, std::ostream& out);
/// "dataset,lambda,transductive_error,bias_only_error,verdict".
void write_t_study_details_csv(const TStudySummary& summary, std::ostream& out);

}  // namespace oed
