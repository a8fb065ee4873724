#include "oed/harness.hpp"

#include "oed/csv.hpp"
#include "oed/error.hpp"
#include "oed/gram_io.hpp"
#include "oed/linalg.hpp"
#include "oed/regression.hpp"
#include "oed/rng.hpp"
#include "oed/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace oed {

namespace {

constexpr const char* kRandom = "random";
constexpr const char* kClassical = "classical-oed";
constexpr const char* kOverparam = "overparam-oed";

void check_sizes(const std::vector<Index>& sizes, Index limit, const char* what) {
  if (sizes.empty()) throw InputError(std::string(what) + ": no design sizes");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 1) throw InputError(std::string(what) + ": design sizes must be positive");
    if (k > 0 && sizes[k] <= sizes[k - 1]) throw InputError(std::string(what) + ": design sizes must increase");
  }
  if (sizes.back() > limit) {
    std::ostringstream msg;
    msg << what << ": largest design size " << sizes.back() << " exceeds pool size " << limit;
    throw InputError(msg.str());
  }
}

std::vector<Index> one_to(Index n) {
  std::vector<Index> out(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = k + 1;
  return out;
}

IndexList prefix(const IndexList& indices, Index n) {
  return IndexList(indices.begin(), indices.begin() + n);
}

Matrix gather_block(const Matrix& k, const IndexList& rows, const IndexList& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index b = 0; b < out.cols(); ++b)
    for (Index a = 0; a < out.rows(); ++a) out(a, b) = k(rows[a], cols[b]);
  return out;
}

Matrix gather_columns(const Matrix& k, const IndexList& cols) {
  Matrix out(k.rows(), static_cast<Index>(cols.size()));
  for (Index b = 0; b < out.cols(); ++b) out.col(b) = k.col(cols[b]);
  return out;
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

/// Runs job(k) for k in [0, jobs) on a small thread pool. The first
/// exception is rethrown once every worker has stopped.
template <typename Job>
void parallel_for(std::size_t jobs, unsigned threads, Job job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs; k = next++) {
      try {
        job(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs;
      }
    }
  };
  const unsigned n = worker_count(threads, jobs);
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_number(double value) {
  if (std::isinf(value)) return "inf";
  return format_double(value);
}

double parse_number(const std::string& text, const std::string& context) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw InputError("cannot parse '" + text + "' in " + context);
  return value;
}

}  // namespace

void write_curves_csv(const CurveTable& table, std::ostream& out) {
  out << "method,n,seed,mse\n";
  for (const CurveRow& row : table.rows)
    out << row.method << ',' << row.n << ',' << row.seed << ',' << format_double(row.mse) << '\n';
}

void write_curves_csv(const CurveTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  write_curves_csv(table, out);
  if (!out) throw InputError("failed writing " + path);
}

double median_mse(const CurveTable& table, const std::string& method, Index n) {
  std::vector<double> values;
  for (const CurveRow& row : table.rows)
    if (row.method == method && row.n == n) values.push_back(row.mse);
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

void ExperimentConfig::validate() const {
  if (d < 1 || pool < 1 || test < 1) throw InputError("d, pool and test sizes must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("sigma must be a finite non-negative number");
  if (repetitions < 1) throw InputError("at least one repetition is required");
  if (sigma_index_base != 0 && sigma_index_base != 1) throw InputError("sigma index base must be 0 or 1");
  check_sizes(design_sizes(), pool, "double-descent");
  for (const std::string& m : methods)
    if (m != kRandom && m != kClassical && m != kOverparam) throw InputError("unknown method '" + m + "'");
}

std::vector<Index> ExperimentConfig::design_sizes() const { return sizes.empty() ? one_to(max_n) : sizes; }

SyntheticInstance make_synthetic_instance(const ExperimentConfig& config, std::uint64_t repetition) {
  Rng rng = Rng::stream(config.seed, repetition);
  const Index d = config.d;
  SyntheticInstance inst;
  inst.sigma_diag.resize(d);
  for (Index i = 0; i < d; ++i)
    inst.sigma_diag(i) = std::exp(-2.5 * static_cast<double>(i + config.sigma_index_base) / static_cast<double>(d));
  const Vector scale = inst.sigma_diag.cwiseSqrt();

  inst.w = rng.normal_vector(d);
  inst.pool = rng.normal_matrix(config.pool, d) * scale.asDiagonal();
  inst.pool_targets = inst.pool * inst.w + config.sigma * rng.normal_vector(config.pool);
  inst.test = rng.normal_matrix(config.test, d) * scale.asDiagonal();
  inst.test_targets = inst.test * inst.w + config.sigma * rng.normal_vector(config.test);
  inst.design_seed = rng.next_u64();
  return inst;
}

IndexList double_descent_design(const ExperimentConfig& config, const SyntheticInstance& instance,
                                const std::string& method) {
  const Index n = config.design_sizes().back();
  if (method == kRandom) return select_random(config.pool, n, instance.design_seed).indices;
  const PoolMatrix pool(instance.pool);
  if (method == kClassical) return greedy_features(pool, n, CriterionParams{0.0, CriterionParams::kInfinity}).indices;
  if (method == kOverparam) return greedy_features(pool, n, CriterionParams{0.0, config.sigma * config.sigma}).indices;
  throw InputError("unknown method '" + method + "'");
}

CurveTable run_double_descent(const ExperimentConfig& config) {
  config.validate();
  const std::vector<Index> sizes = config.design_sizes();
  const std::size_t reps = static_cast<std::size_t>(config.repetitions);
  std::vector<CurveTable> parts(reps);

  parallel_for(reps, config.threads, [&](std::size_t r) {
    const SyntheticInstance inst = make_synthetic_instance(config, r);
    CurveTable& part = parts[r];
    for (const std::string& method : config.methods) {
      const IndexList design = double_descent_design(config, inst, method);
      for (Index n : sizes) {
        const IndexList s = prefix(design, n);
        const Matrix x = linalg::select_rows(inst.pool, s);
        Vector y(n);
        for (Index k = 0; k < n; ++k) y(k) = inst.pool_targets(s[static_cast<std::size_t>(k)]);
        const FitModel model = ridge_fit(x, y, 0.0);
        part.rows.push_back(CurveRow{method, n, r, test_mse(model, inst.test, inst.test_targets)});
      }
      part.designs.push_back(RecordedDesign{method, r, design});
    }
  });

  CurveTable table;
  for (const CurveTable& part : parts) {
    table.rows.insert(table.rows.end(), part.rows.begin(), part.rows.end());
    table.designs.insert(table.designs.end(), part.designs.begin(), part.designs.end());
  }
  return table;
}

std::vector<CriterionParams> parse_params_list(const std::string& text) {
  std::vector<CriterionParams> out;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InputError("expected lambda:t, got '" + item + "'");
    CriterionParams p;
    p.lambda = parse_number(item.substr(0, colon), "params list");
    p.t = parse_number(item.substr(colon + 1), "params list");
    p.validate();
    out.push_back(p);
  }
  if (out.empty()) throw InputError("empty params list");
  return out;
}

std::string params_label(const CriterionParams& params) {
  return "greedy:lambda=" + format_number(params.lambda) + ":t=" + format_number(params.t);
}

CurveTable run_kernel_design(const GramMatrix& pool_gram, const Matrix& test_cross, const Matrix& pool_targets,
                             const Matrix& test_targets, const KernelDesignConfig& config) {
  const Index m = pool_gram.size();
  if (pool_targets.rows() != m) throw InputError("pool labels do not match the pool size");
  if (test_cross.cols() != m || test_cross.rows() != test_targets.rows())
    throw InputError("test kernel does not match the pool and test labels");
  if (config.params.empty()) throw InputError("no criterion parameters given");
  const std::vector<Index> sizes = config.sizes.empty() ? one_to(std::min<Index>(100, m)) : config.sizes;
  check_sizes(sizes, m, "kernel-design");

  const Matrix& k = pool_gram.data();
  auto score = [&](CurveTable& table, const std::string& method, std::uint64_t seed, const IndexList& design,
                   double lambda) {
    for (Index n : sizes) {
      if (n > static_cast<Index>(design.size())) break;
      const IndexList s = prefix(design, n);
      const FitModel model = krr_fit(gather_block(k, s, s), linalg::select_rows(pool_targets, s), lambda);
      const Matrix predictions = krr_predict(model, gather_columns(test_cross, s));
      table.rows.push_back(CurveRow{method, n, seed, mean_squared_error(predictions, test_targets)});
    }
    table.designs.push_back(RecordedDesign{method, seed, design});
  };

  CurveTable table;
  CandidateOptions options;
  options.subsample = config.subsample;
  options.seed = config.seed;
  for (const CriterionParams& params : config.params) {
    DesignResult result;
    try {
      result = greedy_fast(pool_gram, sizes.back(), params, options);
    } catch (const DegeneratePoolError& e) {
      if (config.warn) {
        std::ostringstream msg;
        msg << params_label(params) << " stopped at size " << e.achieved() << ": " << e.what();
        config.warn(msg.str());
      }
      if (e.achieved() == 0) continue;
      result = greedy_fast(pool_gram, static_cast<Index>(e.achieved()), params, options);
    }
    score(table, params_label(params), 0, result.indices, params.lambda);
  }
  if (config.include_random) {
    const DesignResult random = select_random(m, sizes.back(), config.seed);
    score(table, kRandom, config.seed, random.indices, config.params.front().lambda);
  }
  return table;
}

namespace {

Matrix read_targets(const std::string& path, const KernelDesignConfig& config) {
  return read_labels_csv(path, config.classes, config.header).targets;
}

}  // namespace

CurveTable run_kernel_design(const KernelDesignConfig& config) {
  const Matrix pool_targets = read_targets(config.labels_path, config);
  const Matrix test_targets = read_targets(config.test_labels_path, config);
  if (const auto* pre = std::get_if<kernel::Precomputed>(&config.kernel)) {
    const GramMatrix full = load_gram(pre->path);
    const Index m = pool_targets.rows();
    if (full.size() != m + test_targets.rows())
      throw InputError("precomputed Gram must cover the pool followed by the test points");
    const GramMatrix pool_gram(full.data().topLeftCorner(m, m));
    return run_kernel_design(pool_gram, full.data().bottomLeftCorner(test_targets.rows(), m), pool_targets,
                             test_targets, config);
  }
  const PoolMatrix pool(read_matrix_csv(config.pool_path, config.header));
  const Matrix test = read_matrix_csv(config.test_pool_path, config.header);
  return run_kernel_design(make_gram(pool, config.kernel), cross_kernel(test, pool.data(), config.kernel),
                           pool_targets, test_targets, config);
}

TStudyDataset read_labeled_dataset(const std::string& path, const std::string& name) {
  const Matrix raw = read_matrix_csv(path, true);
  if (raw.cols() < 2) throw InputError(path + ": expected features followed by a class column");
  TStudyDataset out;
  out.name = name;
  out.features = raw.leftCols(raw.cols() - 1);
  out.class_ids.reserve(static_cast<std::size_t>(raw.rows()));
  for (Index r = 0; r < raw.rows(); ++r) {
    const double c = raw(r, raw.cols() - 1);
    if (c < 0.0 || c != std::floor(c)) {
      std::ostringstream msg;
      msg << path << ":" << r + 2 << ": class id must be a non-negative integer";
      throw InputError(msg.str());
    }
    out.class_ids.push_back(static_cast<int>(c));
  }
  return out;
}

Verdict compare_errors(double transductive_error, double bias_only_error, double margin) {
  const double scale = std::max(transductive_error, bias_only_error);
  if (std::abs(transductive_error - bias_only_error) < margin * scale || scale == 0.0) return Verdict::Same;
  return transductive_error < bias_only_error ? Verdict::TransductiveBetter : Verdict::BiasOnlyBetter;
}

TStudySummary run_t_study(const std::vector<TStudyDataset>& datasets, const TStudyConfig& config) {
  if (config.n < 1) throw InputError("design size must be positive");
  TStudySummary summary;
  for (double lambda : config.lambdas) {
    if (!(lambda > 0.0)) throw InputError("t-study lambdas must be positive");
    summary.counts.push_back(TStudyCounts{lambda, 0, 0, 0});
  }

  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const TStudyDataset& data = datasets[k];
    const Index total = data.features.rows();
    const Index pool_size = (total + 1) / 2;
    if (pool_size < config.n + 1 || total - pool_size < 1) {
      if (config.warn) {
        std::ostringstream msg;
        msg << "skipping " << data.name << ": " << total << " points are too few for n = " << config.n;
        config.warn(msg.str());
      }
      continue;
    }
    const IndexList order = select_random(total, total, Rng::stream(config.seed, k).next_u64()).indices;
    const IndexList pool_rows(order.begin(), order.begin() + pool_size);
    const IndexList test_rows(order.begin() + pool_size, order.end());

    Matrix pool = linalg::select_rows(data.features, pool_rows);
    Matrix test = linalg::select_rows(data.features, test_rows);
    const Eigen::RowVectorXd mean = pool.colwise().mean();
    Eigen::RowVectorXd scale = (pool.rowwise() - mean).colwise().norm() / std::sqrt(static_cast<double>(pool_size));
    for (Index c = 0; c < scale.size(); ++c)
      if (!(scale(c) > 0.0)) scale(c) = 1.0;
    pool = (pool.rowwise() - mean).array().rowwise() / scale.array();
    test = (test.rowwise() - mean).array().rowwise() / scale.array();

    const int classes = *std::max_element(data.class_ids.begin(), data.class_ids.end()) + 1;
    std::vector<int> pool_ids, test_ids;
    for (Index r : pool_rows) pool_ids.push_back(data.class_ids[static_cast<std::size_t>(r)]);
    for (Index r : test_rows) test_ids.push_back(data.class_ids[static_cast<std::size_t>(r)]);
    const Matrix targets = one_hot(pool_ids, classes);

    const KernelSpec spec = kernel::Rbf{1.0 / static_cast<double>(data.features.cols())};
    const GramMatrix gram = make_gram(PoolMatrix(pool), spec);
    const Matrix cross = cross_kernel(test, pool, spec);

    auto error_of = [&](const CriterionParams& params) {
      const IndexList s = greedy_fast(gram, config.n, params).indices;
      const FitModel model = krr_fit(gather_block(gram.data(), s, s), linalg::select_rows(targets, s), params.lambda);
      return classification_error(krr_predict(model, gather_columns(cross, s)), test_ids);
    };
    for (std::size_t l = 0; l < config.lambdas.size(); ++l) {
      const double lambda = config.lambdas[l];
      TStudyOutcome outcome;
      outcome.dataset = data.name;
      outcome.lambda = lambda;
      outcome.transductive_error = error_of(CriterionParams{lambda, lambda});
      outcome.bias_only_error = error_of(CriterionParams{lambda, 0.0});
      outcome.verdict = compare_errors(outcome.transductive_error, outcome.bias_only_error, config.tie_margin);
      TStudyCounts& counts = summary.counts[l];
      switch (outcome.verdict) {
        case Verdict::TransductiveBetter: ++counts.transductive_better; break;
        case Verdict::BiasOnlyBetter: ++counts.bias_only_better; break;
        case Verdict::Same: ++counts.same; break;
      }
      summary.outcomes.push_back(outcome);
    }
  }
  return summary;
}

void write_t_study_csv(const TStudySummary& summary, std::ostream& out) {
  out << "lambda,transductive_better,bias_only_better,same\n";
  for (const TStudyCounts& c : summary.counts)
    out << format_double(c.lambda) << ',' << c.transductive_better << ',' << c.bias_only_better << ',' << c.same
        << '\n';
}

void write_t_study_details_csv(const TStudySummary& summary, std::ostream& out) {
  out << "dataset,lambda,transductive_error,bias_only_error,verdict\n";
  for (const TStudyOutcome& o : summary.outcomes) {
    const char* verdict = o.verdict == Verdict::TransductiveBetter ? "transductive"
                          : o.verdict == Verdict::BiasOnlyBetter   ? "bias-only"
                                                                   : "same";
    out << o.dataset << ',' << format_double(o.lambda) << ',' << format_double(o.transductive_error) << ','
        << format_double(o.bias_only_error) << ',' << verdict << '\n';
  }
}

}  // namespace oed
