#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tweetbench/corpus.hpp"
#include "tweetbench/features.hpp"
#include "tweetbench/finetune.hpp"
#include "tweetbench/preprocess.hpp"

namespace tweetbench::evaluate {

// Metrics

/// Fraction of positions where prediction equals truth.
double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// One-vs-rest confusion counts per class.
struct ConfusionCounts {
  std::vector<long> tp, fp, fn, tn;
  long n = 0;

  static ConfusionCounts from(std::span<const int> y_true, std::span<const int> y_pred, int num_classes);
  /// (TP + TN) / (TP + FP + TN + FN) for class c taken as the positive class.
  double one_vs_rest_accuracy(int c) const;
  /// Micro average over classes of the per-class outcomes: sum TP / n.
  double micro_accuracy() const;
  long correct() const;
};

struct TTest {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
  bool significant = false;  // p < 0.05
  bool degenerate = false;   // zero variance with nonzero mean difference
};

/// Regularized incomplete beta I_x(a, b) by its power series with the symmetry switch.
double incomplete_beta(double x, double a, double b);
/// Two-tailed p of Student's t with df degrees of freedom.
double student_t_two_tailed(double t, double df);
/// Paired two-tailed t-test on d_i = a_i - b_i.
TTest paired_ttest(std::span<const double> a, std::span<const double> b);

// Documents and classifiers

/// A preprocessed tweet: tokens for count/embedding models, the rendered
/// string for sentence encoders.
struct Document {
  features::TokenList tokens;
  std::string text;
};

struct PreparedCorpus {
  std::vector<std::string> ids;
  std::vector<Document> docs;
  std::vector<int> labels;
  std::vector<std::string> label_names;

  int num_classes() const { return static_cast<int>(label_names.size()); }
};

PreparedCorpus prepare(const corpus::Corpus& corpus, const preprocess::Pipeline& pipeline);

class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual void fit(std::span<const Document> docs, std::span<const int> labels, int num_classes) = 0;
  virtual std::vector<int> predict(std::span<const Document> docs) const = 0;
  /// Hash of everything fitted from the training data (vocabulary, IDF, weights).
  virtual std::string fitted_hash() const = 0;
};

enum class Family { kMnb, kLr, kCnn, kLstm, kBiLstm, kStf };

/// Which model is being evaluated plus the shared, read-only resources it needs.
struct ModelSpec {
  Family family = Family::kMnb;
  std::string features = "bow";  // bow | tfidf | embedding (classical only)
  std::string backend;           // stf only
  std::shared_ptr<const features::EmbeddingTable> embeddings;
  std::shared_ptr<const finetune::EncoderBackend> backend_prototype;
  /// Seeds initialisation, shuffling and inner splits when the config has no "seed".
  std::uint64_t seed = 0;

  /// "mnb", "lr", "cnn", "lstm", "bilstm" or "stf:<backend>".
  std::string model_name() const;
  /// Table-style row label, e.g. "MNB-BoW", "LR-TF_IDF", "MNB", "CNN", "all-mpnet-base-v2".
  std::string display_name() const;
};

std::optional<Family> family_from_model_name(std::string_view name, std::string* backend = nullptr);
bool is_neural(Family f);

/// Builds an unfitted classifier for one hyperparameter point.
using ClassifierFactory = std::function<std::unique_ptr<TextClassifier>(const nlohmann::json& config)>;

/// Validates config keys against the family's schema (ConfigError on unknown keys or values).
void validate_config(const ModelSpec& spec, const nlohmann::json& config);
ClassifierFactory make_factory(ModelSpec spec);

// Cross-validation

struct EvaluationResult {
  std::string model_name;
  std::string display_name;
  std::string dataset;
  std::string features;
  std::string protocol = "selection-cv";
  nlohmann::json config;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  std::uint64_t seed = 0;
  std::string fold_assignment_hash;
  std::vector<std::string> fitted_hashes;
  int grid_index = -1;

  nlohmann::json to_json() const;
  static EvaluationResult from_json(const nlohmann::json& doc);
};

/// Fits on the union of the other folds and scores each fold in turn. Fold
/// failures are rethrown with the fold index and config attached.
EvaluationResult cross_validate(const ClassifierFactory& factory, const nlohmann::json& config,
                                std::span<const Document> docs, std::span<const int> labels, int num_classes,
                                const corpus::FoldAssignment& folds, std::uint64_t seed = 0);

// Grids

struct HyperGrid {
  std::string model;
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;

  std::size_t size() const;
  /// Cartesian product, first axis slowest.
  std::vector<nlohmann::json> enumerate() const;
  nlohmann::json to_json() const;
  /// {"model": ..., "axes": [{"name": ..., "values": [...]}, ...]} or an
  /// axes object whose key order is preserved.
  static HyperGrid from_json(const nlohmann::ordered_json& doc);
};

std::vector<std::string> builtin_grid_names();
/// Built-in grid by name: mnb_default, lr_default, {cnn,lstm,bilstm}_search,
/// {cnn,lstm,bilstm}_best_{d1,d2}, stf_search, stf_best_{d1,d2} (resolved for
/// the backend in `model_name`), and default (one point of model defaults).
HyperGrid builtin_grid(std::string_view name, std::string_view model_name);
/// Builtin name or path to a grid JSON file.
HyperGrid resolve_grid(std::string_view reference, std::string_view model_name);

struct GridOutcome {
  std::size_t best = 0;
  std::vector<EvaluationResult> results;  // enumeration order
};

using Evaluator = std::function<EvaluationResult(const nlohmann::json& config)>;

/// Evaluates every grid point on up to `jobs` threads. The best point has the
/// highest mean accuracy; the earliest enumerated point wins ties.
GridOutcome grid_search(const HyperGrid& grid, const Evaluator& evaluator, int jobs = 1);

/// Outer k-fold loop with a grid search on each outer training part (inner
/// folds use derive_seed(seed, outer fold)). fold_accuracies are outer scores.
EvaluationResult nested_cross_validate(const ClassifierFactory& factory, const HyperGrid& grid,
                                       std::span<const Document> docs, std::span<const int> labels,
                                       std::span<const std::string> label_names, std::span<const std::string> ids,
                                       const corpus::FoldAssignment& outer, std::uint64_t seed, int jobs = 1);

// Reports

enum class Layout { kTable1, kTable4, kTable5 };
std::optional<Layout> layout_from_name(std::string_view name);

struct Comparison {
  std::string model_name;  // row label (display name) or model name
  std::string dataset;
  std::string baseline;
  TTest test;
};

struct ReportInput {
  std::vector<EvaluationResult> results;
  std::vector<Comparison> comparisons;
  std::vector<std::pair<std::string, corpus::CorpusStats>> stats;  // table1
};

struct Report {
  std::string markdown;
  std::string csv;
};

/// Row group used by the Table 4 layout.
std::string group_of(std::string_view model_name);

Report emit_report(const ReportInput& input, Layout layout);

}  // namespace tweetbench::evaluate
