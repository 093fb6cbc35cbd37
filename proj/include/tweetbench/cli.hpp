#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tweetbench/corpus.hpp"
#include "tweetbench/evaluate.hpp"

namespace tweetbench::cli {

namespace fs = std::filesystem;

std::string_view version();

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const fs::path& path, const std::string& content);

struct StatsOptions {
  fs::path dataset;
  std::optional<corpus::Format> format;
  std::optional<fs::path> preprocess_config;
  bool per_class = false;
  bool json = false;
};

/// Table-shaped Markdown (or JSON) statistics on `out`.
void cmd_stats(const StatsOptions& options, std::ostream& out);

struct PreprocessOptions {
  fs::path input;
  fs::path output;  // JSONL, one tokenized tweet per line
  std::optional<fs::path> config;
  std::optional<corpus::Format> format;
};

/// Returns the number of tweets written.
std::size_t cmd_preprocess(const PreprocessOptions& options);

struct RunSpec {
  fs::path dataset;
  std::string dataset_name;  // defaults to the file stem
  std::optional<corpus::Format> format;
  std::string model;             // mnb | lr | cnn | lstm | bilstm | stf:<backend>
  std::string features = "bow";  // classical models only
  std::string grid = "default";  // built-in name or grid file
  std::optional<evaluate::HyperGrid> grid_inline;  // set when re-running a manifest
  int k = 5;
  std::uint64_t seed = 0;
  fs::path output_dir;
  int jobs = 1;
  bool nested = false;
  std::string embeddings;  // file path or random:DIM
  std::optional<fs::path> preprocess_config;
  std::optional<nlohmann::json> preprocess_inline;  // set when re-running a manifest
  std::optional<fs::path> backend_cache;
  int stub_dim = 64;
  /// Checked when re-running a manifest: the dataset and word lists must not have changed.
  std::string expected_content_hash;
  std::string expected_preprocess_hash;

  /// ConfigError when the combination cannot run.
  void validate() const;
  /// Reads a manifest written by cmd_run; the grid comes back inline.
  static RunSpec from_manifest(const fs::path& manifest_path);
};

struct RunOutcome {
  evaluate::EvaluationResult reported;
  std::vector<evaluate::EvaluationResult> all;
  nlohmann::json manifest;
};

/// preprocess -> features -> grid search / cross-validation -> report.
/// Writes manifest.json, results.jsonl, best.json, report.md and report.csv
/// into output_dir. Progress goes to `log`.
RunOutcome cmd_run(const RunSpec& spec, std::ostream& log);

/// One JSON object per grid point, in enumeration order.
void cmd_grid(const std::string& reference, const std::string& model, std::ostream& out);

/// Reported result of a run directory (best.json), or a result JSON file.
evaluate::EvaluationResult load_reported(const fs::path& path);

struct CompareOptions {
  std::vector<fs::path> inputs;
  std::string baseline;  // model or display name
  std::optional<fs::path> output_dir;
};

/// Paired t-tests of every result against the baseline on the same dataset.
/// Results on one dataset must share a fold assignment hash (DataError otherwise).
evaluate::Report cmd_compare(const CompareOptions& options, std::ostream& out);

struct ReportOptions {
  evaluate::Layout layout = evaluate::Layout::kTable4;
  /// Run directories / result files; for table1, datasets as PATH or NAME=PATH.
  std::vector<std::string> inputs;
  std::string baseline;  // table5
  std::optional<fs::path> output_dir;
  std::optional<fs::path> preprocess_config;
};

evaluate::Report cmd_report(const ReportOptions& options, std::ostream& out);

}  // namespace tweetbench::cli
