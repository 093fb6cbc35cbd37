#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tweetbench/preprocess.hpp"

namespace tweetbench::corpus {

struct LabeledTweet {
  std::string id;
  std::string text;
  std::string label;
};

/// Immutable labeled collection. Labels are kept in first-appearance order
/// and identified by their position in that order everywhere downstream.
class Corpus {
 public:
  Corpus() = default;
  /// Throws DataError on duplicate ids, empty text or empty labels.
  explicit Corpus(std::vector<LabeledTweet> tweets);

  const std::vector<LabeledTweet>& tweets() const { return tweets_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return tweets_.size(); }
  bool empty() const { return tweets_.empty(); }
  std::size_t num_classes() const { return labels_.size(); }

  /// Label index per tweet, in corpus order.
  const std::vector<int>& label_ids() const { return label_ids_; }
  int label_index(std::string_view label) const;

  std::vector<std::string> texts() const;

  /// Hash of ids, texts and labels in order.
  std::string content_hash() const;

 private:
  std::vector<LabeledTweet> tweets_;
  std::vector<std::string> labels_;
  std::vector<int> label_ids_;
  std::unordered_map<std::string, int> label_lookup_;
};

enum class Format { kCsv, kTsv, kJsonl };

std::optional<Format> format_from_name(std::string_view name);
std::string_view format_name(Format format);
/// Picks the format from the file extension (.csv, .tsv, .jsonl/.json); CSV otherwise.
Format format_for_path(const std::filesystem::path& path);

/// CSV/TSV need a header row naming `text` and `label` (and optionally `id`);
/// records without an id get their 1-based record number.
Corpus parse_corpus(std::string_view content, Format format, std::string_view source = "<memory>");
Corpus load_corpus(const std::filesystem::path& path, Format format);
Corpus load_corpus(const std::filesystem::path& path);

struct ClassStats {
  std::size_t n_tweets = 0;
  std::size_t word_count = 0;
  std::size_t unique_words = 0;
  double avg_words = 0.0;
};

struct CorpusStats {
  std::size_t n_tweets = 0;
  std::size_t word_count = 0;
  std::size_t unique_words = 0;
  double avg_words_per_tweet = 0.0;
  /// In label order.
  std::vector<std::pair<std::string, ClassStats>> per_class;

  /// Smallest / largest class by tweet count (first wins ties).
  std::size_t minority_class() const;
  std::size_t majority_class() const;
};

/// Counts word tokens after preprocessing; placeholder and annotation tags are
/// not words and are excluded.
CorpusStats compute_stats(const Corpus& corpus, const preprocess::Pipeline& pipeline);

nlohmann::json to_json(const CorpusStats& stats);

/// Table with rows "Number of tweets", "Word count", "Unique words",
/// "Average words per tweet". With per_class, minority/majority columns and
/// one column per class precede the total.
std::string to_markdown(const CorpusStats& stats, bool per_class = false);

/// Fold index per tweet (corpus order).
struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;
  std::vector<std::string> ids;

  int fold(std::string_view id) const;
  std::vector<std::size_t> validation_indices(int fold) const;
  std::vector<std::size_t> training_indices(int fold) const;
  std::vector<std::size_t> sizes() const;

  /// Hash over k and (id, fold) pairs; used to check result comparability.
  std::string hash() const;
  nlohmann::json to_json() const;
};

/// Per-class shuffle under `seed`, then one round-robin pass over the classes
/// in label order. Throws DataError naming any class with fewer than k tweets.
FoldAssignment stratified_folds(const Corpus& corpus, int k, std::uint64_t seed);

/// Same rule over plain label ids (used for inner folds of nested CV).
std::vector<int> stratified_fold_ids(std::span<const int> labels, int num_classes, int k,
                                     std::uint64_t seed,
                                     std::span<const std::string> label_names = {});

}  // namespace tweetbench::corpus
