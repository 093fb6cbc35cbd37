#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "tweetbench/cli.hpp"
#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/finetune.hpp"

namespace tweetbench::cli {

using nlohmann::json;
namespace ev = evaluate;

std::string_view version() { return TWEETBENCH_VERSION; }

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

constexpr std::uint64_t kEmbeddingStream = 0xe3bedULL;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.hex();
}

/// Word-list sources become absolute so the manifest works from any directory.
json absolute_sources(json config, const fs::path& base_dir) {
  for (const char* key : {"lexicon", "stopwords"}) {
    const auto src = config.value(key, std::string("builtin"));
    if (src == "builtin" || src == "none") continue;
    fs::path p(src);
    if (p.is_relative()) p = base_dir / p;
    config[key] = fs::absolute(p).lexically_normal().string();
  }
  return config;
}

struct Resources {
  std::shared_ptr<const features::EmbeddingTable> embeddings;
  json embeddings_info;
};

Resources load_embedding_resource(const RunSpec& spec, const ev::PreparedCorpus& data, std::ostream& log) {
  Resources r;
  if (spec.embeddings.starts_with("random:")) {
    int dim = 0;
    try {
      dim = std::stoi(spec.embeddings.substr(7));
    } catch (const std::exception&) {
      throw ConfigError("bad embedding spec '" + spec.embeddings + "' (expected random:DIM)");
    }
    if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
    std::set<std::string> terms;
    for (const auto& d : data.docs) terms.insert(d.tokens.begin(), d.tokens.end());
    const std::vector<std::string> list(terms.begin(), terms.end());
    r.embeddings = std::make_shared<const features::EmbeddingTable>(
        features::random_embeddings(list, dim, derive_seed(spec.seed, kEmbeddingStream)));
    r.embeddings_info = {{"source", spec.embeddings}, {"dimension", dim}};
    log << "embeddings: random vectors, dimension " << dim << "\n";
    return r;
  }
  std::vector<std::string> warnings;
  auto table = features::load_embeddings(spec.embeddings, &warnings);
  for (const auto& w : warnings) log << "warning: " << w << "\n";
  r.embeddings_info = {{"source", fs::absolute(spec.embeddings).string()},
                       {"dimension", table.dimension()},
                       {"vectors", table.size()},
                       {"hash", file_hash(spec.embeddings)}};
  log << "embeddings: " << table.size() << " vectors, dimension " << table.dimension() << "\n";
  r.embeddings = std::make_shared<const features::EmbeddingTable>(std::move(table));
  return r;
}

nlohmann::ordered_json ordered(const json& j) { return nlohmann::ordered_json::parse(j.dump()); }

std::string jsonl(const std::vector<ev::EvaluationResult>& results) {
  std::string out;
  for (const auto& r : results) out += r.to_json().dump() + "\n";
  return out;
}

}  // namespace

void RunSpec::validate() const {
  std::string backend;
  const auto family = ev::family_from_model_name(model, &backend);
  if (!family) throw ConfigError("unknown model '" + model + "' (mnb, lr, cnn, lstm, bilstm or stf:<backend>)");
  if (*family == ev::Family::kStf && !finetune::is_known_backend(backend))
    throw ConfigError("unknown encoder backend '" + backend + "'");
  const bool classical = *family == ev::Family::kMnb || *family == ev::Family::kLr;
  if (classical && features != "bow" && features != "tfidf" && features != "embedding")
    throw ConfigError("unknown feature set '" + features + "' (bow, tfidf or embedding)");
  if (((classical && features == "embedding") || ev::is_neural(*family)) && embeddings.empty())
    throw ConfigError(model + (classical ? " with embedding features" : "") +
                      " needs --embeddings (a vector file or random:DIM)");
  if (k < 2) throw ConfigError("k must be >= 2");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (stub_dim < 8) throw ConfigError("stub dimension must be >= 8");
  if (dataset.empty()) throw ConfigError("no dataset given");
  if (output_dir.empty()) throw ConfigError("no output directory given");
}

RunSpec RunSpec::from_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot open manifest " + manifest_path.string());
  nlohmann::ordered_json m;
  try {
    in >> m;
  } catch (const std::exception& e) {
    throw ConfigError("manifest " + manifest_path.string() + ": " + e.what());
  }
  RunSpec s;
  try {
    const auto& ds = m.at("dataset");
    s.dataset = ds.at("path").get<std::string>();
    s.dataset_name = ds.at("name").get<std::string>();
    s.format = corpus::format_from_name(ds.at("format").get<std::string>());
    s.expected_content_hash = ds.at("content_hash").get<std::string>();
    s.model = m.at("model").get<std::string>();
    s.features = m.at("features").get<std::string>();
    s.k = m.at("k").get<int>();
    s.seed = m.at("seed").get<std::uint64_t>();
    s.jobs = m.value("jobs", 1);
    s.nested = m.at("protocol").get<std::string>() == "nested-cv";
    s.grid = m.at("grid").at("reference").get<std::string>();
    s.grid_inline = ev::HyperGrid::from_json(m.at("grid"));
    s.grid_inline->model = s.model;
    if (!m.at("embeddings").is_null()) s.embeddings = m.at("embeddings").at("source").get<std::string>();
    if (!m.at("backend").is_null()) {
      const auto& be = m.at("backend");
      s.stub_dim = be.at("stub_dim").get<int>();
      if (!be.at("cache_dir").is_null()) s.backend_cache = be.at("cache_dir").get<std::string>();
    }
    s.preprocess_inline = json::parse(m.at("preprocess").dump());
    s.expected_preprocess_hash = m.at("preprocess").at("hash").get<std::string>();
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ConfigError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  return s;
}

RunOutcome cmd_run(const RunSpec& spec, std::ostream& log) {
  spec.validate();
  std::string backend_name;
  const auto family = *ev::family_from_model_name(spec.model, &backend_name);

  const auto format = spec.format.value_or(corpus::format_for_path(spec.dataset));
  const auto corpus = corpus::load_corpus(spec.dataset, format);
  if (!spec.expected_content_hash.empty() && corpus.content_hash() != spec.expected_content_hash)
    throw DataError("dataset " + spec.dataset.string() + " changed since the manifest was written");
  const std::string dataset_name = spec.dataset_name.empty() ? spec.dataset.stem().string() : spec.dataset_name;
  log << "dataset " << dataset_name << ": " << corpus.size() << " tweets, " << corpus.num_classes() << " classes\n";

  preprocess::PipelineConfig pconfig;
  json preprocess_json;
  if (spec.preprocess_inline) {
    pconfig = preprocess::PipelineConfig::from_json(*spec.preprocess_inline);
  } else if (spec.preprocess_config) {
    pconfig = preprocess::PipelineConfig::load(*spec.preprocess_config);
  }
  preprocess_json = pconfig.to_json();
  if (spec.preprocess_config && !spec.preprocess_inline)
    preprocess_json = absolute_sources(preprocess_json, spec.preprocess_config->parent_path());
  if (!spec.expected_preprocess_hash.empty() && pconfig.hash() != spec.expected_preprocess_hash)
    throw ConfigError("preprocessing word lists changed since the manifest was written");

  const preprocess::Pipeline pipeline(pconfig);
  const auto data = ev::prepare(corpus, pipeline);
  const auto folds = corpus::stratified_folds(corpus, spec.k, spec.seed);

  ev::ModelSpec ms;
  ms.family = family;
  ms.backend = backend_name;
  ms.seed = spec.seed;
  const bool classical = family == ev::Family::kMnb || family == ev::Family::kLr;
  ms.features = classical ? spec.features : "";

  json embeddings_info = nullptr, backend_info = nullptr;
  if ((classical && spec.features == "embedding") || ev::is_neural(family)) {
    auto res = load_embedding_resource(spec, data, log);
    ms.embeddings = res.embeddings;
    embeddings_info = res.embeddings_info;
  }
  if (family == ev::Family::kStf) {
    finetune::BackendOptions opts;
    opts.stub_dim = spec.stub_dim;
    opts.seed = spec.seed;
    opts.cache_dir = spec.backend_cache;
    ms.backend_prototype = finetune::load_backend(backend_name, opts);
    backend_info = {{"name", backend_name},
                    {"stub_dim", spec.stub_dim},
                    {"cache_dir", spec.backend_cache ? json(fs::absolute(*spec.backend_cache).string()) : json()}};
    log << "backend " << backend_name << " (dimension " << ms.backend_prototype->embedding_dim() << ")\n";
  }

  const auto grid = spec.grid_inline ? *spec.grid_inline : ev::resolve_grid(spec.grid, ms.model_name());
  const auto points = grid.enumerate();
  for (const auto& p : points) ev::validate_config(ms, p);
  log << "grid " << spec.grid << ": " << points.size() << " point(s), " << spec.k << " folds, "
      << (spec.nested ? "nested-cv" : "selection-cv") << "\n";

  const auto factory = ev::make_factory(ms);
  RunOutcome outcome;
  if (spec.nested) {
    outcome.reported = ev::nested_cross_validate(factory, grid, data.docs, data.labels, data.label_names, data.ids,
                                                 folds, spec.seed, spec.jobs);
    outcome.all = {outcome.reported};
  } else {
    const auto search = ev::grid_search(
        grid,
        [&](const json& config) {
          return ev::cross_validate(factory, config, data.docs, data.labels, data.num_classes(), folds, spec.seed);
        },
        spec.jobs);
    outcome.all = search.results;
    outcome.reported = search.results[search.best];
  }
  auto label = [&](ev::EvaluationResult& r) {
    r.model_name = ms.model_name();
    r.display_name = ms.display_name();
    r.dataset = dataset_name;
    r.features = ms.features;
  };
  for (auto& r : outcome.all) label(r);
  label(outcome.reported);

  nlohmann::ordered_json grid_json = {{"reference", spec.grid}, {"model", grid.model}, {"size", points.size()},
                                      {"enumeration", "cartesian, first axis slowest"}};
  grid_json["axes"] = ordered(grid.to_json()["axes"]);

  nlohmann::ordered_json m;
  m["tool"] = "tweetbench";
  m["version"] = version();
  m["command"] = "run";
  m["created_at"] = utc_now();
  m["dataset"] = {{"path", fs::absolute(spec.dataset).lexically_normal().string()},
                  {"name", dataset_name},
                  {"format", corpus::format_name(format)},
                  {"content_hash", corpus.content_hash()},
                  {"tweets", corpus.size()},
                  {"labels", corpus.labels()}};
  m["model"] = spec.model;
  m["features"] = spec.features;
  m["protocol"] = outcome.reported.protocol;
  m["k"] = spec.k;
  m["seed"] = spec.seed;
  m["jobs"] = spec.jobs;
  m["grid"] = grid_json;
  m["embeddings"] = ordered(embeddings_info);
  m["backend"] = ordered(backend_info);
  m["preprocess"] = ordered(preprocess_json);
  m["fold_assignment_hash"] = folds.hash();
  m["selected"] = {{"grid_index", outcome.reported.grid_index},
                   {"config", ordered(outcome.reported.config)},
                   {"mean_accuracy", outcome.reported.mean_accuracy}};
  m["outputs"] = {"results.jsonl", "best.json", "report.md", "report.csv"};
  outcome.manifest = json::parse(m.dump());

  const auto report = ev::emit_report({{outcome.reported}, {}, {}}, ev::Layout::kTable4);
  write_atomic(spec.output_dir / "results.jsonl", jsonl(outcome.all));
  write_atomic(spec.output_dir / "best.json", outcome.reported.to_json().dump(2) + "\n");
  write_atomic(spec.output_dir / "report.md", report.markdown);
  write_atomic(spec.output_dir / "report.csv", report.csv);
  write_atomic(spec.output_dir / "manifest.json", m.dump(2) + "\n");

  log << ms.display_name() << " on " << dataset_name << ": mean accuracy " << outcome.reported.mean_accuracy
      << " (config " << outcome.reported.config.dump() << ")\n";
  return outcome;
}

}  // namespace tweetbench::cli
