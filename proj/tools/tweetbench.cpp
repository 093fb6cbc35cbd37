// tweetbench: tweet topic-classification benchmark runner.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tweetbench/cli.hpp"
#include "tweetbench/common/error.hpp"

namespace tb = tweetbench;
namespace cli = tweetbench::cli;

namespace {

std::optional<tb::corpus::Format> parse_format(const std::string& name) {
  if (name.empty()) return std::nullopt;
  auto f = tb::corpus::format_from_name(name);
  if (!f) throw tb::ConfigError("unknown format '" + name + "' (csv, tsv or jsonl)");
  return f;
}

template <typename T>
std::optional<T> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<T>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tweet topic-classification benchmark: preprocessing, cross-validated grid search, reports"};
  app.set_version_flag("--version", std::string(cli::version()));
  app.require_subcommand(1);

  // stats
  cli::StatsOptions stats;
  std::string stats_format, stats_pre;
  auto* c_stats = app.add_subcommand("stats", "Dataset statistics table");
  c_stats->add_option("dataset", stats.dataset, "CSV/TSV/JSONL dataset")->required();
  c_stats->add_flag("--per-class", stats.per_class, "Add minority/majority and per-class columns");
  c_stats->add_flag("--json", stats.json, "Print JSON instead of Markdown");
  c_stats->add_option("--format", stats_format, "Input format (default: from extension)");
  c_stats->add_option("--config", stats_pre, "Preprocessing config JSON");

  // preprocess
  cli::PreprocessOptions pre;
  std::string pre_format, pre_config;
  auto* c_pre = app.add_subcommand("preprocess", "Tokenize a dataset to JSONL");
  c_pre->add_option("--in", pre.input, "Input dataset")->required();
  c_pre->add_option("--out", pre.output, "Output JSONL")->required();
  c_pre->add_option("--config", pre_config, "Preprocessing config JSON");
  c_pre->add_option("--format", pre_format, "Input format (default: from extension)");

  // run
  cli::RunSpec run;
  std::string run_format, run_pre, run_cache, manifest, run_out;
  auto* c_run = app.add_subcommand("run", "Cross-validated grid search for one model on one dataset");
  c_run->add_option("--dataset", run.dataset, "Dataset file");
  c_run->add_option("--name", run.dataset_name, "Dataset name in reports (default: file stem)");
  c_run->add_option("--format", run_format, "Input format (default: from extension)");
  c_run->add_option("--model", run.model, "mnb | lr | cnn | lstm | bilstm | stf:<backend>");
  c_run->add_option("--features", run.features, "bow | tfidf | embedding (mnb, lr)")->capture_default_str();
  c_run->add_option("--grid", run.grid, "Built-in grid name or grid JSON file")->capture_default_str();
  c_run->add_option("--k", run.k, "Number of folds")->capture_default_str();
  c_run->add_option("--seed", run.seed, "Seed for folds, initialisation and shuffling")->capture_default_str();
  c_run->add_option("--out", run_out, "Output directory");
  c_run->add_option("--jobs", run.jobs, "Grid points evaluated in parallel")->capture_default_str();
  c_run->add_flag("--nested", run.nested, "Nested cross-validation instead of selection CV");
  c_run->add_option("--embeddings", run.embeddings, "Word vectors file or random:DIM");
  c_run->add_option("--config", run_pre, "Preprocessing config JSON");
  c_run->add_option("--backend-cache", run_cache,
                    "Checkpoint directory (default: $TWEETBENCH_BACKEND_CACHE)");
  c_run->add_option("--stub-dim", run.stub_dim, "Stub encoder dimension")->capture_default_str();
  c_run->add_option("--manifest", manifest, "Re-run from a manifest.json (other options ignored except --out, --jobs)");

  // grid
  std::string grid_ref, grid_model;
  bool grid_list = false;
  auto* c_grid = app.add_subcommand("grid", "List built-in grids or enumerate one");
  c_grid->add_option("grid", grid_ref, "Built-in grid name or grid JSON file");
  c_grid->add_option("--model", grid_model, "Model the grid is for");
  c_grid->add_flag("--list", grid_list, "List built-in grid names");

  // compare
  cli::CompareOptions cmp;
  std::string cmp_out;
  auto* c_cmp = app.add_subcommand("compare", "Paired t-tests against a baseline");
  c_cmp->add_option("results", cmp.inputs, "Run directories or result JSON files")->required();
  c_cmp->add_option("--baseline", cmp.baseline, "Baseline model or display name")->required();
  c_cmp->add_option("--out", cmp_out, "Write compare.md / compare.csv here");

  // report
  cli::ReportOptions rep;
  std::string rep_layout = "table4", rep_out, rep_pre;
  auto* c_rep = app.add_subcommand("report", "Render results as a table");
  c_rep->add_option("inputs", rep.inputs, "Run directories (table4/5) or datasets NAME=PATH (table1)")->required();
  c_rep->add_option("--layout", rep_layout, "table1 | table4 | table5")->capture_default_str();
  c_rep->add_option("--baseline", rep.baseline, "Baseline for table5");
  c_rep->add_option("--out", rep_out, "Write <layout>.md / .csv here");
  c_rep->add_option("--config", rep_pre, "Preprocessing config JSON (table1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(tb::ExitCode::kConfigError);
  }

  try {
    if (*c_stats) {
      stats.format = parse_format(stats_format);
      stats.preprocess_config = opt_path<std::filesystem::path>(stats_pre);
      cli::cmd_stats(stats, std::cout);
    } else if (*c_pre) {
      pre.format = parse_format(pre_format);
      pre.config = opt_path<std::filesystem::path>(pre_config);
      const auto n = cli::cmd_preprocess(pre);
      std::cerr << "wrote " << n << " tweets to " << pre.output.string() << "\n";
    } else if (*c_run) {
      if (!manifest.empty()) {
        const int jobs = run.jobs;
        run = cli::RunSpec::from_manifest(manifest);
        run.jobs = jobs;
        run.output_dir = run_out.empty() ? std::filesystem::path(manifest).parent_path() : std::filesystem::path(run_out);
      } else {
        run.format = parse_format(run_format);
        run.preprocess_config = opt_path<std::filesystem::path>(run_pre);
        run.backend_cache = opt_path<std::filesystem::path>(run_cache);
        run.output_dir = run_out;
        if (run.model.empty()) throw tb::ConfigError("run needs --model (or --manifest)");
      }
      cli::cmd_run(run, std::cerr);
    } else if (*c_grid) {
      if (grid_list || grid_ref.empty()) {
        for (const auto& n : tb::evaluate::builtin_grid_names()) std::cout << n << "\n";
      } else {
        if (grid_model.empty()) throw tb::ConfigError("grid needs --model");
        cli::cmd_grid(grid_ref, grid_model, std::cout);
      }
    } else if (*c_cmp) {
      cmp.output_dir = opt_path<std::filesystem::path>(cmp_out);
      cli::cmd_compare(cmp, std::cout);
    } else if (*c_rep) {
      const auto layout = tb::evaluate::layout_from_name(rep_layout);
      if (!layout) throw tb::ConfigError("unknown layout '" + rep_layout + "' (table1, table4 or table5)");
      rep.layout = *layout;
      rep.output_dir = opt_path<std::filesystem::path>(rep_out);
      rep.preprocess_config = opt_path<std::filesystem::path>(rep_pre);
      cli::cmd_report(rep, std::cout);
    }
  } catch (const tb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(tb::ExitCode::kDataError);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
