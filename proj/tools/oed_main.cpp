#include "oed/criteria.hpp"
#include "oed/csv.hpp"
#include "oed/error.hpp"
#include "oed/gram_io.hpp"
#include "oed/harness.hpp"
#include "oed/kernels.hpp"
#include "oed/regression.hpp"
#include "oed/selection.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

using json = nlohmann::json;

namespace {

struct KernelArgs {
  std::string kind = "linear";
  double gamma = 1.0;
  int degree = 2;
  double coef0 = 1.0;
  int depth = 1;
};

void add_kernel_options(CLI::App* app, KernelArgs& args, bool allow_precomputed) {
  std::vector<std::string> kinds = {"linear", "rbf", "poly", "ntk-fc"};
  if (allow_precomputed) kinds.push_back("precomputed");
  app->add_option("--kernel", args.kind, "Kernel")->check(CLI::IsMember(kinds));
  app->add_option("--gamma", args.gamma, "RBF gamma");
  app->add_option("--degree", args.degree, "Polynomial degree");
  app->add_option("--coef0", args.coef0, "Polynomial offset");
  app->add_option("--depth", args.depth, "NTK hidden layers");
}

oed::KernelSpec to_spec(const KernelArgs& args, const std::string& gram_path = {}) {
  oed::KernelSpec spec;
  if (args.kind == "linear") spec = oed::kernel::Linear{};
  else if (args.kind == "rbf") spec = oed::kernel::Rbf{args.gamma};
  else if (args.kind == "poly") spec = oed::kernel::Polynomial{args.degree, args.coef0};
  else if (args.kind == "ntk-fc") spec = oed::kernel::NtkFc{args.depth};
  else spec = oed::kernel::Precomputed{gram_path};
  oed::validate(spec);
  return spec;
}

double parse_t(const std::string& text) {
  if (text == "inf") return oed::CriterionParams::kInfinity;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw oed::InputError("--t expects a number or 'inf', got '" + text + "'");
  return value;
}

json number_or_inf(double value) {
  if (std::isinf(value)) return "inf";
  return value;
}

void write_json(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw oed::InputError("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw oed::InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw oed::FormatError(path + ": " + e.what());
  }
}

std::vector<oed::Index> parse_sizes(const std::string& text, oed::Index max_n) {
  if (text.empty()) {
    std::vector<oed::Index> out;
    for (oed::Index n = 1; n <= max_n; ++n) out.push_back(n);
    return out;
  }
  std::vector<oed::Index> out;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    try {
      out.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw oed::InputError("bad design size '" + item + "'");
    }
  }
  return out;
}

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based optimal experimental design for overparameterized regression"};
  app.require_subcommand(1);

  // gram
  auto* gram_cmd = app.add_subcommand("gram", "Build a Gram matrix from a pool CSV");
  std::string gram_input, gram_output;
  bool gram_header = false;
  KernelArgs gram_kernel;
  gram_cmd->add_option("--input", gram_input, "Pool CSV")->required();
  gram_cmd->add_flag("--header", gram_header, "Skip the first CSV line");
  add_kernel_options(gram_cmd, gram_kernel, false);
  gram_cmd->add_option("--output", gram_output, "Binary Gram output")->required();

  // select
  auto* select_cmd = app.add_subcommand("select", "Select a design from a Gram matrix");
  std::string sel_gram, sel_output, sel_method = "greedy", sel_t = "0", sel_pool;
  oed::Index sel_n = 0;
  double sel_lambda = 0.0;
  std::uint64_t sel_seed = 0;
  std::optional<oed::Index> sel_subsample;
  bool sel_header = false;
  select_cmd->add_option("--gram", sel_gram, "Binary Gram matrix")->required();
  select_cmd->add_option("--n", sel_n, "Design size")->required();
  select_cmd->add_option("--lambda", sel_lambda, "Ridge coefficient");
  select_cmd->add_option("--t", sel_t, "Bias-variance tradeoff, a number or inf");
  select_cmd->add_option("--method", sel_method, "Selection method")
      ->check(CLI::IsMember({"greedy", "greedy-naive", "random", "kcenters", "variance"}));
  select_cmd->add_option("--seed", sel_seed, "Seed for random methods and subsampling");
  select_cmd->add_option("--subsample", sel_subsample, "Candidates scored per greedy step");
  select_cmd->add_option("--pool", sel_pool, "Pool CSV (required by kcenters)");
  select_cmd->add_flag("--header", sel_header, "Skip the first line of the pool CSV");
  select_cmd->add_option("--output", sel_output, "Design JSON output")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Fit on a design and score on a test set");
  std::string ev_pool, ev_labels, ev_design, ev_test_pool, ev_test_labels, ev_output;
  std::optional<int> ev_classes;
  double ev_lambda = 0.0;
  bool ev_header = false;
  KernelArgs ev_kernel;
  eval_cmd->add_option("--pool", ev_pool, "Pool CSV")->required();
  eval_cmd->add_option("--labels", ev_labels, "Pool labels CSV")->required();
  eval_cmd->add_option("--classes", ev_classes, "Number of classes for one-hot targets");
  eval_cmd->add_option("--design", ev_design, "Design JSON")->required();
  eval_cmd->add_option("--test-pool", ev_test_pool, "Test points CSV")->required();
  eval_cmd->add_option("--test-labels", ev_test_labels, "Test labels CSV")->required();
  eval_cmd->add_option("--lambda", ev_lambda, "Ridge coefficient");
  eval_cmd->add_flag("--header", ev_header, "Skip the first line of every CSV");
  add_kernel_options(eval_cmd, ev_kernel, false);
  eval_cmd->add_option("--output", ev_output, "Result JSON output")->required();

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run an experiment driver");
  exp_cmd->require_subcommand(1);

  auto* dd_cmd = exp_cmd->add_subcommand("double-descent", "Synthetic double-descent curves");
  oed::ExperimentConfig dd;
  std::string dd_output, dd_methods;
  dd_cmd->add_option("--d", dd.d, "Feature dimension")->capture_default_str();
  dd_cmd->add_option("--pool", dd.pool, "Pool size")->capture_default_str();
  dd_cmd->add_option("--test", dd.test, "Test size")->capture_default_str();
  dd_cmd->add_option("--sigma", dd.sigma, "Noise standard deviation")->capture_default_str();
  dd_cmd->add_option("--max-n", dd.max_n, "Largest design size")->capture_default_str();
  dd_cmd->add_option("--seeds", dd.repetitions, "Number of repetitions")->capture_default_str();
  dd_cmd->add_option("--seed", dd.seed, "Base seed")->capture_default_str();
  dd_cmd->add_option("--sigma-index-base", dd.sigma_index_base, "First index i of Sigma_ii = exp(-2.5 i / d)")
      ->check(CLI::IsMember({0, 1}))
      ->capture_default_str();
  dd_cmd->add_option("--methods", dd_methods, "Comma-separated subset of random,classical-oed,overparam-oed");
  dd_cmd->add_option("--threads", dd.threads, "Worker threads, 0 for all cores");
  dd_cmd->add_option("--output", dd_output, "Curves CSV output")->required();

  auto* kd_cmd = exp_cmd->add_subcommand("kernel-design", "Greedy kernel designs scored with kernel ridge regression");
  oed::KernelDesignConfig kd;
  KernelArgs kd_kernel;
  kd_kernel.kind = "rbf";
  std::string kd_params = "0:0,0:0.5,0.5625:0,0.5625:0.5625", kd_sizes, kd_output, kd_gram;
  oed::Index kd_max_n = 100;
  kd_cmd->add_option("--pool", kd.pool_path, "Pool CSV");
  kd_cmd->add_option("--labels", kd.labels_path, "Pool labels CSV")->required();
  kd_cmd->add_option("--test-pool", kd.test_pool_path, "Test points CSV");
  kd_cmd->add_option("--test-labels", kd.test_labels_path, "Test labels CSV")->required();
  kd_cmd->add_flag("--header", kd.header, "Skip the first line of every CSV");
  kd_cmd->add_option("--classes", kd.classes, "Number of classes for one-hot targets");
  add_kernel_options(kd_cmd, kd_kernel, true);
  kd_cmd->add_option("--gram", kd_gram, "Precomputed Gram over pool then test points");
  kd_cmd->add_option("--params", kd_params, "Comma-separated lambda:t pairs")->capture_default_str();
  kd_cmd->add_option("--sizes", kd_sizes, "Comma-separated design sizes (default 1..max-n)");
  kd_cmd->add_option("--max-n", kd_max_n, "Largest design size")->capture_default_str();
  kd_cmd->add_option("--subsample", kd.subsample, "Candidates scored per greedy step");
  kd_cmd->add_flag("--random", kd.include_random, "Add a random-design arm");
  kd_cmd->add_option("--seed", kd.seed, "Seed for subsampling and the random arm");
  kd_cmd->add_option("--output", kd_output, "Curves CSV output")->required();

  auto* ts_cmd = exp_cmd->add_subcommand("t-study", "Bias-only versus transductive designs on small datasets");
  oed::TStudyConfig ts;
  std::vector<std::string> ts_datasets;
  std::string ts_lambdas = "0.001,0.01,0.1,1,10", ts_output, ts_details;
  ts_cmd->add_option("--dataset", ts_datasets, "name=path.csv, features then class id, one header line")
      ->required();
  ts_cmd->add_option("--lambdas", ts_lambdas, "Comma-separated lambdas")->capture_default_str();
  ts_cmd->add_option("--n", ts.n, "Design size")->capture_default_str();
  ts_cmd->add_option("--margin", ts.tie_margin, "Relative tie margin")->capture_default_str();
  ts_cmd->add_option("--seed", ts.seed, "Seed for the pool/test splits");
  ts_cmd->add_option("--output", ts_output, "Count table CSV")->required();
  ts_cmd->add_option("--details", ts_details, "Per-dataset results CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gram_cmd) {
      const oed::PoolMatrix pool(oed::read_matrix_csv(gram_input, gram_header));
      oed::save_gram(oed::make_gram(pool, to_spec(gram_kernel)), gram_output);
    } else if (*select_cmd) {
      const oed::GramMatrix gram = oed::load_gram(sel_gram);
      const oed::CriterionParams params{sel_lambda, parse_t(sel_t)};
      params.validate();
      oed::CandidateOptions options;
      options.subsample = sel_subsample;
      options.seed = sel_seed;
      oed::DesignResult result;
      if (sel_method == "greedy") result = oed::greedy_fast(gram, sel_n, params, options);
      else if (sel_method == "greedy-naive") result = oed::greedy_naive(gram, sel_n, params, options);
      else if (sel_method == "variance") result = oed::select_variance_only(gram, sel_n, params.lambda, options);
      else if (sel_method == "random") result = oed::select_random(gram.size(), sel_n, sel_seed);
      else {
        if (sel_pool.empty()) throw oed::InputError("kcenters needs --pool");
        const oed::PoolMatrix pool(oed::read_matrix_csv(sel_pool, sel_header));
        if (pool.rows() != gram.size()) throw oed::InputError("pool and Gram sizes differ");
        result = oed::select_k_centers(pool, sel_n, sel_seed);
      }
      json doc;
      doc["method"] = result.method;
      doc["lambda"] = result.params.lambda;
      doc["t"] = number_or_inf(result.params.t);
      doc["indices"] = result.indices;
      json scores = json::array();
      for (double s : result.scores) scores.push_back(std::isfinite(s) ? json(s) : json(nullptr));
      doc["scores"] = scores;
      doc["seed"] = result.seed ? json(*result.seed) : json(nullptr);
      doc["pool_checksum"] = oed::checksum_hex(oed::matrix_checksum(gram.data()));
      write_json(doc, sel_output);
    } else if (*eval_cmd) {
      const json design = read_json(ev_design);
      if (!design.contains("indices") || !design["indices"].is_array())
        throw oed::FormatError(ev_design + ": missing indices array");
      const auto indices = design["indices"].get<oed::IndexList>();
      const oed::Matrix pool = oed::read_matrix_csv(ev_pool, ev_header);
      const oed::Labels labels = oed::read_labels_csv(ev_labels, ev_classes, ev_header);
      const oed::Matrix test = oed::read_matrix_csv(ev_test_pool, ev_header);
      const oed::Labels test_labels = oed::read_labels_csv(ev_test_labels, ev_classes, ev_header);
      if (labels.targets.rows() != pool.rows()) throw oed::InputError("pool and labels differ in length");
      for (oed::Index i : indices)
        if (i < 0 || i >= pool.rows()) throw oed::InputError("design index outside the pool");
      const oed::KernelSpec spec = to_spec(ev_kernel);
      const oed::PoolMatrix pool_matrix(pool);
      if (design.contains("pool_checksum") && design["pool_checksum"].is_string()) {
        const auto expected = design["pool_checksum"].get<std::string>();
        const auto actual = oed::checksum_hex(oed::matrix_checksum(oed::make_gram(pool_matrix, spec).data()));
        if (expected != actual) warn("design was selected on a different Gram (checksum " + expected + ")");
      }
      oed::Matrix design_rows(static_cast<oed::Index>(indices.size()), pool.cols());
      oed::Matrix design_targets(static_cast<oed::Index>(indices.size()), labels.targets.cols());
      for (std::size_t k = 0; k < indices.size(); ++k) {
        design_rows.row(static_cast<oed::Index>(k)) = pool.row(indices[k]);
        design_targets.row(static_cast<oed::Index>(k)) = labels.targets.row(indices[k]);
      }
      oed::Matrix predictions;
      if (std::holds_alternative<oed::kernel::Linear>(spec)) {
        predictions = oed::predict(oed::ridge_fit(design_rows, design_targets, ev_lambda), test);
      } else {
        const oed::Matrix k_ss = oed::cross_kernel(design_rows, design_rows, spec);
        predictions = oed::krr_predict(oed::krr_fit(k_ss, design_targets, ev_lambda),
                                       oed::cross_kernel(test, design_rows, spec));
      }
      json doc;
      doc["method"] = design.value("method", "");
      doc["n"] = indices.size();
      doc["lambda"] = ev_lambda;
      doc["kernel"] = oed::describe(spec);
      doc["mse"] = oed::mean_squared_error(predictions, test_labels.targets);
      if (ev_classes) doc["classification_error"] = oed::classification_error(predictions, test_labels.class_ids);
      write_json(doc, ev_output);
    } else if (*dd_cmd) {
      if (!dd_methods.empty()) {
        dd.methods.clear();
        std::stringstream items(dd_methods);
        std::string item;
        while (std::getline(items, item, ',')) dd.methods.push_back(item);
      }
      oed::write_curves_csv(oed::run_double_descent(dd), dd_output);
    } else if (*kd_cmd) {
      kd.kernel = to_spec(kd_kernel, kd_gram);
      if (kd_kernel.kind == "precomputed" && kd_gram.empty()) throw oed::InputError("precomputed kernel needs --gram");
      if (kd_kernel.kind != "precomputed" && (kd.pool_path.empty() || kd.test_pool_path.empty()))
        throw oed::InputError("--pool and --test-pool are required unless the kernel is precomputed");
      kd.params = oed::parse_params_list(kd_params);
      kd.sizes = parse_sizes(kd_sizes, kd_max_n);
      kd.warn = warn;
      oed::write_curves_csv(oed::run_kernel_design(kd), kd_output);
    } else if (*ts_cmd) {
      ts.lambdas.clear();
      std::stringstream items(ts_lambdas);
      std::string item;
      while (std::getline(items, item, ',')) ts.lambdas.push_back(parse_t(item));
      std::vector<oed::TStudyDataset> datasets;
      for (const std::string& entry : ts_datasets) {
        const auto eq = entry.find('=');
        const std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
        const std::string name =
            eq == std::string::npos ? std::filesystem::path(entry).stem().string() : entry.substr(0, eq);
        datasets.push_back(oed::read_labeled_dataset(path, name));
      }
      ts.warn = warn;
      const oed::TStudySummary summary = oed::run_t_study(datasets, ts);
      std::ofstream out(ts_output, std::ios::binary);
      if (!out) throw oed::InputError("cannot open " + ts_output + " for writing");
      oed::write_t_study_csv(summary, out);
      if (!ts_details.empty()) {
        std::ofstream details(ts_details, std::ios::binary);
        if (!details) throw oed::InputError("cannot open " + ts_details + " for writing");
        oed::write_t_study_details_csv(summary, details);
      }
    }
  } catch (const oed::DegeneratePoolError& e) {
    std::cerr << "error: " << e.what() << " (design reached size " << e.achieved() << ")\n";
    return 3;
  } catch (const oed::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
