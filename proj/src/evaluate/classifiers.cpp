#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "tweetbench/classical.hpp"
#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/evaluate.hpp"
#include "tweetbench/neural.hpp"

namespace tweetbench::evaluate {

using nlohmann::json;

PreparedCorpus prepare(const corpus::Corpus& corpus, const preprocess::Pipeline& pipeline) {
  PreparedCorpus out;
  out.label_names = corpus.labels();
  out.labels = corpus.label_ids();
  out.ids.reserve(corpus.size());
  out.docs.reserve(corpus.size());
  for (const auto& tweet : corpus.tweets()) {
    auto tok = pipeline.run(tweet.text);
    out.ids.push_back(tweet.id);
    out.docs.push_back({tok.tokens, tok.render()});
  }
  return out;
}

std::string ModelSpec::model_name() const {
  switch (family) {
    case Family::kMnb: return "mnb";
    case Family::kLr: return "lr";
    case Family::kCnn: return "cnn";
    case Family::kLstm: return "lstm";
    case Family::kBiLstm: return "bilstm";
    case Family::kStf: return "stf:" + backend;
  }
  return "mnb";
}

std::string ModelSpec::display_name() const {
  switch (family) {
    case Family::kMnb:
    case Family::kLr: {
      std::string base = family == Family::kMnb ? "MNB" : "LR";
      if (features == "bow") return base + "-BoW";
      if (features == "tfidf") return base + "-TF_IDF";
      return base;  // word-embedding features carry the bare name
    }
    case Family::kCnn: return "CNN";
    case Family::kLstm: return "LSTM";
    case Family::kBiLstm: return "BiLSTM";
    case Family::kStf: return backend;
  }
  return "";
}

std::optional<Family> family_from_model_name(std::string_view name, std::string* backend) {
  if (name == "mnb") return Family::kMnb;
  if (name == "lr") return Family::kLr;
  if (name == "cnn") return Family::kCnn;
  if (name == "lstm") return Family::kLstm;
  if (name == "bilstm") return Family::kBiLstm;
  if (name.starts_with("stf:") && name.size() > 4) {
    if (backend) *backend = std::string(name.substr(4));
    return Family::kStf;
  }
  return std::nullopt;
}

bool is_neural(Family f) { return f == Family::kCnn || f == Family::kLstm || f == Family::kBiLstm; }

namespace {

[[noreturn]] void bad_config(const std::string& model, const std::string& msg) {
  throw ConfigError(model + " config: " + msg);
}

template <typename T>
T read(const json& doc, const char* key, T fallback, const std::string& model) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config(model, std::string("bad value for '") + key + "': " + doc.at(key).dump());
  }
}

void check_keys(const json& doc, std::initializer_list<const char*> known, const std::string& model) {
  if (!doc.is_object()) bad_config(model, "must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      bad_config(model, "unknown key '" + key + "'");
  }
}

struct ClassicalParams {
  classical::MnbParams mnb;
  classical::LrParams lr;
  int min_frequency = 1;
};

ClassicalParams parse_classical(Family family, const json& config) {
  ClassicalParams p;
  if (family == Family::kMnb) {
    check_keys(config, {"alpha", "fit_prior", "min_frequency"}, "mnb");
    p.mnb.alpha = read(config, "alpha", p.mnb.alpha, "mnb");
    p.mnb.fit_prior = read(config, "fit_prior", p.mnb.fit_prior, "mnb");
    if (!(p.mnb.alpha > 0.0) || !std::isfinite(p.mnb.alpha)) bad_config("mnb", "alpha must be > 0");
    p.min_frequency = read(config, "min_frequency", 1, "mnb");
  } else {
    check_keys(config, {"C", "penalty", "class_weight", "max_iter", "tol", "min_frequency"}, "lr");
    p.lr.C = read(config, "C", p.lr.C, "lr");
    if (!(p.lr.C > 0.0) || !std::isfinite(p.lr.C)) bad_config("lr", "C must be > 0");
    if (config.contains("penalty")) {
      auto pen = classical::penalty_from_name(read<std::string>(config, "penalty", "", "lr"));
      if (!pen) bad_config("lr", "penalty must be l1 or l2");
      p.lr.penalty = *pen;
    }
    if (config.contains("class_weight") && !config.at("class_weight").is_null()) {
      auto cw = classical::class_weight_from_name(read<std::string>(config, "class_weight", "", "lr"));
      if (!cw) bad_config("lr", "class_weight must be none or balanced");
      p.lr.class_weight = *cw;
    }
    p.lr.max_iter = read(config, "max_iter", p.lr.max_iter, "lr");
    p.lr.tol = read(config, "tol", p.lr.tol, "lr");
    if (p.lr.max_iter < 1) bad_config("lr", "max_iter must be >= 1");
    if (!(p.lr.tol > 0.0)) bad_config("lr", "tol must be > 0");
    p.min_frequency = read(config, "min_frequency", 1, "lr");
  }
  if (p.min_frequency < 1) bad_config(family == Family::kMnb ? "mnb" : "lr", "min_frequency must be >= 1");
  return p;
}

neural::NeuralConfig parse_neural(const ModelSpec& spec, json config) {
  const std::string arch(spec.model_name());
  if (!config.is_object()) bad_config(arch, "must be a JSON object");
  if (config.contains("arch") && config["arch"] != arch) bad_config(arch, "arch does not match the model");
  config["arch"] = arch;
  if (!config.contains("seed")) config["seed"] = spec.seed;
  return neural::NeuralConfig::from_json(config);
}

finetune::FinetuneConfig parse_stf(const ModelSpec& spec, json config) {
  if (!config.is_object()) bad_config(spec.model_name(), "must be a JSON object");
  if (!config.contains("seed")) config["seed"] = spec.seed;
  return finetune::FinetuneConfig::from_json(config);
}

std::vector<features::TokenList> tokens_of(std::span<const Document> docs) {
  std::vector<features::TokenList> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.tokens);
  return out;
}

class ClassicalClassifier final : public TextClassifier {
 public:
  ClassicalClassifier(const ModelSpec& spec, ClassicalParams params)
      : family_(spec.family), features_(spec.features), embeddings_(spec.embeddings), params_(params) {}

  void fit(std::span<const Document> docs, std::span<const int> labels, int num_classes) override {
    const auto toks = tokens_of(docs);
    Fnv1a h;
    h.update(features_);
    if (features_ == "embedding") {
      MatrixXd dense = features::embed_documents(toks, *embeddings_);
      if (family_ == Family::kMnb) {
        // Counts must be non-negative; shift by the training minima.
        shift_ = (-dense.colwise().minCoeff().transpose()).cwiseMax(0.0);
        dense.rowwise() += shift_.transpose();
        h.update_dense(shift_);
      }
      X_fit_ = dense.sparseView();
    } else {
      vocab_ = features::build_vocabulary(toks, params_.min_frequency);
      h.update(vocab_.hash());
      if (features_ == "tfidf") {
        tfidf_ = features::TfidfTransformer::fit(toks, vocab_);
        h.update(tfidf_.hash());
        X_fit_ = tfidf_.transform(toks, vocab_);
      } else {
        X_fit_ = features::bow_matrix(toks, vocab_);
      }
    }
    if (family_ == Family::kMnb) {
      mnb_ = classical::mnb_fit(X_fit_, labels, num_classes, params_.mnb);
      h.update_dense(mnb_.class_log_prior).update_dense(mnb_.feature_log_prob);
    } else {
      lr_ = classical::lr_fit(X_fit_, labels, num_classes, params_.lr);
      h.update_dense(lr_.weights).update_dense(lr_.bias);
    }
    X_fit_ = {};
    hash_ = h.hex();
    fitted_ = true;
  }

  std::vector<int> predict(std::span<const Document> docs) const override {
    if (!fitted_) throw ModelError("classifier used before fit");
    const auto toks = tokens_of(docs);
    features::SparseMatrix X;
    if (features_ == "embedding") {
      MatrixXd dense = features::embed_documents(toks, *embeddings_);
      if (family_ == Family::kMnb) {
        dense.rowwise() += shift_.transpose();
        dense = dense.cwiseMax(0.0);
      }
      X = dense.sparseView();
    } else if (features_ == "tfidf") {
      X = tfidf_.transform(toks, vocab_);
    } else {
      X = features::bow_matrix(toks, vocab_);
    }
    return family_ == Family::kMnb ? classical::mnb_predict(mnb_, X) : classical::lr_predict(lr_, X);
  }

  std::string fitted_hash() const override { return hash_; }

 private:
  Family family_;
  std::string features_;
  std::shared_ptr<const features::EmbeddingTable> embeddings_;
  ClassicalParams params_;
  features::Vocabulary vocab_;
  features::TfidfTransformer tfidf_;
  VectorXd shift_;
  features::SparseMatrix X_fit_;
  classical::MnbModel mnb_;
  classical::LrModel lr_;
  std::string hash_;
  bool fitted_ = false;
};

/// Stratified hold-out used for early stopping: about a tenth of each class
/// (classes with fewer than two examples stay entirely in training).
std::vector<bool> inner_validation_mask(std::span<const int> labels, int num_classes, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  Rng rng(seed);
  std::vector<bool> held(labels.size(), false);
  for (auto& members : by_class) {
    if (members.size() < 2) continue;
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t take = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * members.size())));
    for (std::size_t j = 0; j < take; ++j) held[members[j]] = true;
  }
  return held;
}

class NeuralClassifier final : public TextClassifier {
 public:
  NeuralClassifier(const ModelSpec& spec, neural::NeuralConfig config)
      : embeddings_(spec.embeddings), config_(std::move(config)) {}

  void fit(std::span<const Document> docs, std::span<const int> labels, int num_classes) override {
    const auto held = inner_validation_mask(labels, num_classes, derive_seed(config_.seed, 0x5e1ec7));
    std::vector<features::TokenList> tr_docs, va_docs;
    std::vector<int> tr_y, va_y;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      auto& d = held[i] ? va_docs : tr_docs;
      auto& y = held[i] ? va_y : tr_y;
      d.push_back(docs[i].tokens);
      y.push_back(labels[i]);
    }
    net_ = std::make_unique<neural::TextNetwork>(config_, embeddings_, num_classes);
    net_->train(tr_docs, tr_y, va_docs, va_y);
  }

  std::vector<int> predict(std::span<const Document> docs) const override {
    if (!net_) throw ModelError("classifier used before fit");
    return net_->predict(tokens_of(docs));
  }

  std::string fitted_hash() const override {
    if (!net_) return "";
    Fnv1a h;
    h.update_dense(net_->parameters());
    return h.hex();
  }

 private:
  std::shared_ptr<const features::EmbeddingTable> embeddings_;
  neural::NeuralConfig config_;
  std::unique_ptr<neural::TextNetwork> net_;
};

class StfClassifier final : public TextClassifier {
 public:
  StfClassifier(const ModelSpec& spec, finetune::FinetuneConfig config)
      : prototype_(spec.backend_prototype), config_(std::move(config)) {}

  void fit(std::span<const Document> docs, std::span<const int> labels, int num_classes) override {
    std::vector<std::string> texts;
    texts.reserve(docs.size());
    for (const auto& d : docs) texts.push_back(d.text);
    model_ = std::make_unique<finetune::StfModel>(
        finetune::finetune(prototype_->clone(), texts, labels, {}, {}, num_classes, config_));
  }

  std::vector<int> predict(std::span<const Document> docs) const override {
    if (!model_) throw ModelError("classifier used before fit");
    std::vector<std::string> texts;
    texts.reserve(docs.size());
    for (const auto& d : docs) texts.push_back(d.text);
    return finetune::stf_predict(*model_, texts).labels;
  }

  std::string fitted_hash() const override {
    if (!model_) return "";
    Fnv1a h;
    h.update_dense(model_->backend->parameters()).update_dense(model_->head_weights).update_dense(model_->head_bias);
    return h.hex();
  }

 private:
  std::shared_ptr<const finetune::EncoderBackend> prototype_;
  finetune::FinetuneConfig config_;
  std::unique_ptr<finetune::StfModel> model_;
};

void check_spec(const ModelSpec& spec) {
  const bool classical = spec.family == Family::kMnb || spec.family == Family::kLr;
  if (classical) {
    if (spec.features != "bow" && spec.features != "tfidf" && spec.features != "embedding")
      throw ConfigError("unknown feature set '" + spec.features + "' (bow, tfidf or embedding)");
    if (spec.features == "embedding" && !spec.embeddings)
      throw ConfigError(spec.model_name() + " with embedding features needs --embeddings");
  }
  if (is_neural(spec.family) && !spec.embeddings)
    throw ConfigError(spec.model_name() + " needs word embeddings (--embeddings)");
  if (spec.family == Family::kStf && !spec.backend_prototype)
    throw ConfigError(spec.model_name() + ": no encoder backend loaded");
}

}  // namespace

void validate_config(const ModelSpec& spec, const json& config) {
  switch (spec.family) {
    case Family::kMnb:
    case Family::kLr: parse_classical(spec.family, config); break;
    case Family::kCnn:
    case Family::kLstm:
    case Family::kBiLstm: parse_neural(spec, config); break;
    case Family::kStf: parse_stf(spec, config); break;
  }
}

ClassifierFactory make_factory(ModelSpec spec) {
  check_spec(spec);
  return [spec = std::move(spec)](const json& config) -> std::unique_ptr<TextClassifier> {
    switch (spec.family) {
      case Family::kMnb:
      case Family::kLr: return std::make_unique<ClassicalClassifier>(spec, parse_classical(spec.family, config));
      case Family::kCnn:
      case Family::kLstm:
      case Family::kBiLstm: return std::make_unique<NeuralClassifier>(spec, parse_neural(spec, config));
      case Family::kStf: return std::make_unique<StfClassifier>(spec, parse_stf(spec, config));
    }
    throw ConfigError("unknown model family");
  };
}

}  // namespace tweetbench::evaluate
