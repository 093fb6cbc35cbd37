#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace tweetbench::preprocess {

using WordSet = std::unordered_set<std::string>;

enum class Tag {
  kHashtag,
  kElongated,
  kRepeated,
  kUrl,
  kEmail,
  kUser,
  kNumber,
  kPercent,
  kMoney,
  kTime,
  kDate,
  kPhone,
  kEmoticon,
};

std::string_view tag_name(Tag tag);
std::optional<Tag> tag_from_name(std::string_view name);

/// "<url>", "<hashtag>", ...
std::string open_tag(Tag tag);
/// "</hashtag>"
std::string close_tag(Tag tag);

/// True for any placeholder or structural tag token emitted by the pipeline.
bool is_tag_token(std::string_view token);

/// Token range [begin, end) carrying an annotation.
struct Annotation {
  Tag tag;
  std::size_t begin;
  std::size_t end;

  bool operator==(const Annotation&) const = default;
};

/// Byte-level bookkeeping: every input byte ends up in exactly one bucket.
///   consumed  - eaten by a rule (whitespace, punctuation, entity spans, '#',
///               collapsed letters, dropped repeats, "RT")
///   emitted   - present in a non-tag output token
///   discarded - stopwords and emoticons
struct CharAccounting {
  std::size_t consumed = 0;
  std::size_t emitted = 0;
  std::size_t discarded = 0;

  std::size_t total() const { return consumed + emitted + discarded; }
};

struct TokenizedTweet {
  std::vector<std::string> tokens;
  std::vector<Annotation> annotations;
  CharAccounting accounting;

  /// Flagged when every token was removed.
  bool empty() const { return tokens.empty(); }

  /// Space-joined token stream.
  std::string render() const;
};

nlohmann::json to_json(const TokenizedTweet& tweet);

enum class Rule {
  kNormalizeEntities,
  kUnpackHashtags,
  kReduceElongated,
  kReduceRepeated,
  kLowercase,
};

std::string_view rule_name(Rule rule);
std::optional<Rule> rule_from_name(std::string_view name);

/// Registry order; also the default pipeline order.
std::span<const Rule> all_rules();

/// Built-in word lists (shared, immutable).
std::shared_ptr<const WordSet> default_lexicon();
std::shared_ptr<const WordSet> default_stopwords();

/// One word per line; blank lines and '#' comments skipped; entries lowercased.
WordSet load_word_list(const std::filesystem::path& path);
WordSet parse_word_list(std::string_view text);

struct PipelineConfig {
  std::vector<Rule> enabled_rules{all_rules().begin(), all_rules().end()};
  std::shared_ptr<const WordSet> lexicon = default_lexicon();
  std::shared_ptr<const WordSet> stopwords = default_stopwords();
  /// Extra emoticon patterns (ECMAScript regex), matched like the built-in table.
  std::vector<std::string> extra_emoticons;

  /// Recorded in manifests; "builtin" or a file path.
  std::string lexicon_source = "builtin";
  std::string stopwords_source = "builtin";

  bool has(Rule rule) const;

  /// Throws ConfigError on an unknown/duplicate rule or when the text-level
  /// rule (normalize_entities) is not first.
  void validate() const;

  /// Reads the declarative config file:
  ///   {"rules": [...], "lexicon": "builtin"|path, "stopwords": "builtin"|"none"|path,
  ///    "emoticons": [regex, ...]}
  /// Relative paths resolve against the config file's directory.
  static PipelineConfig from_json(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  nlohmann::json to_json() const;

  /// Hash over rules, word lists and emoticon patterns.
  std::string hash() const;
};

class Pipeline {
 public:
  Pipeline();
  explicit Pipeline(PipelineConfig config);
  ~Pipeline();
  Pipeline(Pipeline&&) noexcept;
  Pipeline& operator=(Pipeline&&) noexcept;

  /// entity normalization -> tokenization -> hashtag unpacking ->
  /// elongation reduction -> repetition reduction -> lowercasing,
  /// each step only when enabled, in configured order.
  TokenizedTweet run(std::string_view text) const;
  TokenizedTweet operator()(std::string_view text) const { return run(text); }

  /// Text-level step only: matched entities replaced with placeholders,
  /// "RT", stopwords and emoticons removed, whitespace collapsed.
  std::string normalize_entities(std::string_view text) const;

  const PipelineConfig& config() const { return config_; }

 private:
  struct Tables;
  PipelineConfig config_;
  std::unique_ptr<const Tables> tables_;
};

/// "#ILoveComputerScience" -> <hashtag> i love computer science </hashtag>.
/// Mixed-case bodies are split on case changes; caseless bodies are segmented
/// greedily (longest lexicon word first). Unsegmentable residue stays whole.
std::vector<std::string> unpack_hashtag(std::string_view token, const WordSet& lexicon);

struct ElongationResult {
  std::string token;
  bool annotated = false;
};

/// Letter runs longer than two collapse to two; the single-letter form is
/// preferred when only it is a lexicon word.
ElongationResult reduce_elongated(std::string_view token, const WordSet& lexicon);

/// Maximal runs (length >= 2) of an identical token become <repeated> token.
std::vector<std::string> reduce_repeated(std::span<const std::string> tokens);

/// Convenience wrapper building a default Pipeline.
TokenizedTweet preprocess(std::string_view text, const Pipeline& pipeline);

}  // namespace tweetbench::preprocess
