#include <numeric>
#include <string>

#include "tweetbench/common/error.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/evaluate.hpp"

namespace tweetbench::evaluate {

using nlohmann::json;

namespace {

[[noreturn]] void rethrow_with(const Error& e, const std::string& context) {
  const std::string msg = context + ": " + e.what();
  switch (e.code()) {
    case ExitCode::kDataError: throw DataError(msg);
    case ExitCode::kConfigError: throw ConfigError(msg);
    case ExitCode::kBackendError: throw ModelError(msg);
    default: throw Error(e.code(), msg);
  }
}

template <typename T>
std::vector<T> gather(std::span<const T> items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct FoldScore {
  double accuracy;
  std::string fitted_hash;
};

FoldScore fit_and_score(const ClassifierFactory& factory, const json& config, std::span<const Document> docs,
                        std::span<const int> labels, int num_classes, const std::vector<std::size_t>& train,
                        const std::vector<std::size_t>& val) {
  auto model = factory(config);
  const auto tr_docs = gather(docs, train);
  const auto tr_y = gather(labels, train);
  model->fit(tr_docs, tr_y, num_classes);
  const auto va_docs = gather(docs, val);
  const auto va_y = gather(labels, val);
  const auto pred = model->predict(va_docs);
  return {accuracy(va_y, pred), model->fitted_hash()};
}

void check_folds(const corpus::FoldAssignment& folds, std::size_t n) {
  if (folds.fold_of.size() != n)
    throw DataError("fold assignment covers " + std::to_string(folds.fold_of.size()) + " tweets, corpus has " +
                    std::to_string(n));
  if (folds.k < 2) throw ConfigError("cross-validation needs k >= 2");
  for (int f = 0; f < folds.k; ++f)
    if (folds.validation_indices(f).empty()) throw DataError("fold " + std::to_string(f) + " is empty");
}

}  // namespace

EvaluationResult cross_validate(const ClassifierFactory& factory, const json& config, std::span<const Document> docs,
                                std::span<const int> labels, int num_classes, const corpus::FoldAssignment& folds,
                                std::uint64_t seed) {
  if (docs.size() != labels.size()) throw DataError("documents and labels differ in length");
  check_folds(folds, docs.size());
  EvaluationResult r;
  r.config = config;
  r.seed = seed;
  r.fold_assignment_hash = folds.hash();
  for (int f = 0; f < folds.k; ++f) {
    try {
      const auto s = fit_and_score(factory, config, docs, labels, num_classes, folds.training_indices(f),
                                   folds.validation_indices(f));
      r.fold_accuracies.push_back(s.accuracy);
      r.fitted_hashes.push_back(s.fitted_hash);
    } catch (const Error& e) {
      rethrow_with(e, "fold " + std::to_string(f) + " with config " + config.dump());
    }
  }
  r.mean_accuracy = mean_of(r.fold_accuracies);
  return r;
}

EvaluationResult nested_cross_validate(const ClassifierFactory& factory, const HyperGrid& grid,
                                       std::span<const Document> docs, std::span<const int> labels,
                                       std::span<const std::string> label_names, std::span<const std::string> ids,
                                       const corpus::FoldAssignment& outer, std::uint64_t seed, int jobs) {
  if (docs.size() != labels.size() || ids.size() != docs.size())
    throw DataError("documents, labels and ids differ in length");
  check_folds(outer, docs.size());
  const int num_classes = static_cast<int>(label_names.size());

  EvaluationResult r;
  r.protocol = "nested-cv";
  r.seed = seed;
  r.fold_assignment_hash = outer.hash();
  r.config = json::array();
  for (int f = 0; f < outer.k; ++f) {
    const auto train = outer.training_indices(f);
    const auto sub_docs = gather(docs, train);
    const auto sub_y = gather(labels, train);

    corpus::FoldAssignment inner;
    inner.k = outer.k;
    inner.ids = gather(ids, train);
    inner.fold_of = corpus::stratified_fold_ids(sub_y, num_classes, outer.k, derive_seed(seed, f), label_names);

    const auto search = grid_search(
        grid,
        [&](const json& config) {
          return cross_validate(factory, config, sub_docs, sub_y, num_classes, inner, seed);
        },
        jobs);
    const json& chosen = search.results[search.best].config;
    try {
      const auto s = fit_and_score(factory, chosen, docs, labels, num_classes, train, outer.validation_indices(f));
      r.fold_accuracies.push_back(s.accuracy);
      r.fitted_hashes.push_back(s.fitted_hash);
    } catch (const Error& e) {
      rethrow_with(e, "outer fold " + std::to_string(f) + " with config " + chosen.dump());
    }
    r.config.push_back({{"fold", f}, {"grid_index", search.best}, {"config", chosen}});
  }
  r.mean_accuracy = mean_of(r.fold_accuracies);
  return r;
}

json EvaluationResult::to_json() const {
  return {{"model", model_name},
          {"display_name", display_name},
          {"dataset", dataset},
          {"features", features},
          {"protocol", protocol},
          {"grid_index", grid_index},
          {"config", config},
          {"fold_accuracies", fold_accuracies},
          {"mean_accuracy", mean_accuracy},
          {"seed", seed},
          {"fold_assignment_hash", fold_assignment_hash},
          {"fitted_hashes", fitted_hashes}};
}

EvaluationResult EvaluationResult::from_json(const json& doc) {
  EvaluationResult r;
  try {
    r.model_name = doc.at("model").get<std::string>();
    r.display_name = doc.value("display_name", r.model_name);
    r.dataset = doc.value("dataset", "");
    r.features = doc.value("features", "");
    r.protocol = doc.value("protocol", r.protocol);
    r.grid_index = doc.value("grid_index", -1);
    r.config = doc.value("config", json::object());
    r.fold_accuracies = doc.at("fold_accuracies").get<std::vector<double>>();
    r.mean_accuracy = doc.at("mean_accuracy").get<double>();
    r.seed = doc.value("seed", std::uint64_t{0});
    r.fold_assignment_hash = doc.at("fold_assignment_hash").get<std::string>();
    r.fitted_hashes = doc.value("fitted_hashes", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed evaluation result: ") + e.what());
  }
  for (double a : r.fold_accuracies)
    if (!(a >= 0.0 && a <= 1.0)) throw DataError("evaluation result has a fold accuracy outside [0, 1]");
  return r;
}

}  // namespace tweetbench::evaluate
