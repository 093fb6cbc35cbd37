#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "tweetbench/cli.hpp"
#include "tweetbench/common/error.hpp"

namespace tweetbench::cli {

using nlohmann::json;
namespace ev = evaluate;

namespace {

preprocess::Pipeline make_pipeline(const std::optional<fs::path>& config) {
  return config ? preprocess::Pipeline(preprocess::PipelineConfig::load(*config)) : preprocess::Pipeline();
}

corpus::Corpus load(const fs::path& path, const std::optional<corpus::Format>& format) {
  return corpus::load_corpus(path, format.value_or(corpus::format_for_path(path)));
}

void write_report(const ev::Report& report, const std::optional<fs::path>& dir, const std::string& stem) {
  if (!dir) return;
  write_atomic(*dir / (stem + ".md"), report.markdown);
  write_atomic(*dir / (stem + ".csv"), report.csv);
}

std::vector<ev::EvaluationResult> load_all(const std::vector<fs::path>& inputs) {
  std::vector<ev::EvaluationResult> out;
  for (const auto& p : inputs) out.push_back(load_reported(p));
  return out;
}

std::vector<ev::Comparison> compare_against(const std::vector<ev::EvaluationResult>& results,
                                            const std::string& baseline) {
  if (baseline.empty()) throw ConfigError("no baseline given");
  // Results on one dataset must come from the same folds.
  std::map<std::string, const ev::EvaluationResult*> first_on;
  for (const auto& r : results) {
    auto [it, inserted] = first_on.emplace(r.dataset, &r);
    if (!inserted && it->second->fold_assignment_hash != r.fold_assignment_hash)
      throw DataError("results are not comparable on dataset '" + r.dataset + "': " + it->second->display_name +
                      " used folds " + it->second->fold_assignment_hash + ", " + r.display_name + " used " +
                      r.fold_assignment_hash);
    if (!inserted && it->second->fold_accuracies.size() != r.fold_accuracies.size())
      throw DataError("results on dataset '" + r.dataset + "' differ in fold count");
  }
  std::vector<ev::Comparison> out;
  for (const auto& [dataset, unused] : first_on) {
    const ev::EvaluationResult* base = nullptr;
    for (const auto& r : results)
      if (r.dataset == dataset && (r.model_name == baseline || r.display_name == baseline)) {
        base = &r;
        break;
      }
    if (!base) throw ConfigError("baseline '" + baseline + "' has no result on dataset '" + dataset + "'");
    for (const auto& r : results) {
      if (r.dataset != dataset) continue;
      out.push_back({r.display_name.empty() ? r.model_name : r.display_name, dataset, baseline,
                     ev::paired_ttest(r.fold_accuracies, base->fold_accuracies)});
    }
  }
  return out;
}

}  // namespace

void cmd_stats(const StatsOptions& options, std::ostream& out) {
  const auto corpus = load(options.dataset, options.format);
  const auto stats = corpus::compute_stats(corpus, make_pipeline(options.preprocess_config));
  if (options.json)
    out << corpus::to_json(stats).dump(2) << "\n";
  else
    out << corpus::to_markdown(stats, options.per_class);
}

std::size_t cmd_preprocess(const PreprocessOptions& options) {
  const auto corpus = load(options.input, options.format);
  const auto pipeline = make_pipeline(options.config);
  std::string out;
  for (const auto& t : corpus.tweets()) {
    json row = preprocess::to_json(pipeline.run(t.text));
    row["id"] = t.id;
    row["label"] = t.label;
    out += row.dump() + "\n";
  }
  write_atomic(options.output, out);
  return corpus.size();
}

void cmd_grid(const std::string& reference, const std::string& model, std::ostream& out) {
  const auto grid = ev::resolve_grid(reference, model);
  std::size_t i = 0;
  for (const auto& p : grid.enumerate()) out << json{{"index", i++}, {"config", p}}.dump() << "\n";
}

ev::EvaluationResult load_reported(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "best.json" : path;
  std::ifstream in(file);
  if (!in) throw DataError("cannot read results from " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  return ev::EvaluationResult::from_json(doc);
}

ev::Report cmd_compare(const CompareOptions& options, std::ostream& out) {
  if (options.inputs.empty()) throw ConfigError("compare needs at least one result");
  ev::ReportInput input;
  input.results = load_all(options.inputs);
  input.comparisons = compare_against(input.results, options.baseline);
  const auto report = ev::emit_report(input, ev::Layout::kTable5);
  write_report(report, options.output_dir, "compare");
  out << report.markdown;
  return report;
}

ev::Report cmd_report(const ReportOptions& options, std::ostream& out) {
  if (options.inputs.empty()) throw ConfigError("report needs at least one input");
  ev::ReportInput input;
  std::string stem;
  switch (options.layout) {
    case ev::Layout::kTable1: {
      stem = "table1";
      const auto pipeline = make_pipeline(options.preprocess_config);
      for (const auto& spec : options.inputs) {
        const auto eq = spec.find('=');
        const fs::path path = eq == std::string::npos ? fs::path(spec) : fs::path(spec.substr(eq + 1));
        const std::string name = eq == std::string::npos ? path.stem().string() : spec.substr(0, eq);
        input.stats.emplace_back(name, corpus::compute_stats(load(path, std::nullopt), pipeline));
      }
      break;
    }
    case ev::Layout::kTable4:
    case ev::Layout::kTable5: {
      stem = options.layout == ev::Layout::kTable4 ? "table4" : "table5";
      input.results = load_all({options.inputs.begin(), options.inputs.end()});
      if (options.layout == ev::Layout::kTable5) input.comparisons = compare_against(input.results, options.baseline);
      break;
    }
  }
  const auto report = ev::emit_report(input, options.layout);
  write_report(report, options.output_dir, stem);
  out << report.markdown;
  return report;
}

}  // namespace tweetbench::cli
