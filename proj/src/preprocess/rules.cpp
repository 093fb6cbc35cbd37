#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/preprocess.hpp"
#include "text_util.hpp"

namespace tweetbench::data {
extern const char* const kLexicon;
extern const char* const kStopwords;
}  // namespace tweetbench::data

namespace tweetbench::preprocess {

namespace {

constexpr std::array<std::pair<Tag, std::string_view>, 13> kTagNames{{
    {Tag::kHashtag, "hashtag"},
    {Tag::kElongated, "elongated"},
    {Tag::kRepeated, "repeated"},
    {Tag::kUrl, "url"},
    {Tag::kEmail, "email"},
    {Tag::kUser, "user"},
    {Tag::kNumber, "number"},
    {Tag::kPercent, "percent"},
    {Tag::kMoney, "money"},
    {Tag::kTime, "time"},
    {Tag::kDate, "date"},
    {Tag::kPhone, "phone"},
    {Tag::kEmoticon, "emoticon"},
}};

constexpr std::array<std::pair<Rule, std::string_view>, 5> kRuleNames{{
    {Rule::kNormalizeEntities, "normalize_entities"},
    {Rule::kUnpackHashtags, "unpack_hashtags"},
    {Rule::kReduceElongated, "reduce_elongated"},
    {Rule::kReduceRepeated, "reduce_repeated"},
    {Rule::kLowercase, "lowercase"},
}};

constexpr std::array<Rule, 5> kAllRules{Rule::kNormalizeEntities, Rule::kUnpackHashtags,
                                        Rule::kReduceElongated, Rule::kReduceRepeated,
                                        Rule::kLowercase};

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

enum class CharClass { kUpper, kLower, kDigit, kOther, kSeparator };

CharClass classify(unsigned char c) {
  if (is_upper(c)) return CharClass::kUpper;
  if (is_lower(c)) return CharClass::kLower;
  if (is_digit(c)) return CharClass::kDigit;
  if (c >= 0x80) return CharClass::kOther;
  return CharClass::kSeparator;
}

// Splits "ILoveComputerScience2020" into I|Love|Computer|Science|2020 and
// "XMLFile" into XML|File.
std::vector<std::string> camel_split(std::string_view word) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < word.size(); ++i) {
    const char c = word[i];
    if (!current.empty()) {
      const char prev = current.back();
      bool split = false;
      if (is_upper(c) && is_lower(prev)) split = true;
      if (is_upper(c) && is_upper(prev) && i + 1 < word.size() && is_lower(word[i + 1]))
        split = true;
      if (is_digit(c) != is_digit(prev) && (is_alpha(c) || is_alpha(prev))) split = true;
      if (split) out.push_back(std::exchange(current, {}));
    }
    current.push_back(c);
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::size_t longest_word(std::string_view lowered, const WordSet& lexicon) {
  constexpr std::size_t kMaxWord = 32;
  const std::size_t limit = std::min(lowered.size(), kMaxWord);
  for (std::size_t len = limit; len > 0; --len)
    if (lexicon.contains(std::string(lowered.substr(0, len)))) return len;
  return 0;
}

// Greedy longest-match segmentation; characters that start no lexicon word
// accumulate into a residue token.
std::vector<std::string> segment(std::string_view word, const WordSet& lexicon) {
  std::vector<std::string> out;
  const std::string lowered = ascii_lower(word);
  std::string residue;
  std::size_t i = 0;
  while (i < word.size()) {
    const std::size_t len =
        is_alpha(word[i]) ? longest_word(std::string_view(lowered).substr(i), lexicon) : 0;
    if (len == 0) {
      residue.push_back(word[i]);
      ++i;
      continue;
    }
    if (!residue.empty()) out.push_back(std::exchange(residue, {}));
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  if (!residue.empty()) out.push_back(std::move(residue));
  return out;
}

std::string collapse_runs(std::string_view token, std::size_t keep, bool& changed) {
  std::string out;
  out.reserve(token.size());
  std::size_t i = 0;
  while (i < token.size()) {
    std::size_t j = i + 1;
    const char c = token[i];
    if (is_alpha(c)) {
      while (j < token.size() && to_lower_ascii(token[j]) == to_lower_ascii(c)) ++j;
    }
    const std::size_t run = j - i;
    if (run > 2) {
      changed = true;
      out.append(token.substr(i, keep));
    } else {
      out.append(token.substr(i, run));
    }
    i = j;
  }
  return out;
}

}  // namespace

std::string_view tag_name(Tag tag) {
  for (const auto& [t, name] : kTagNames)
    if (t == tag) return name;
  return "unknown";
}

std::optional<Tag> tag_from_name(std::string_view name) {
  for (const auto& [t, n] : kTagNames)
    if (n == name) return t;
  return std::nullopt;
}

std::string open_tag(Tag tag) { return "<" + std::string(tag_name(tag)) + ">"; }
std::string close_tag(Tag tag) { return "</" + std::string(tag_name(tag)) + ">"; }

bool is_tag_token(std::string_view token) {
  if (token.size() < 3 || token.front() != '<' || token.back() != '>') return false;
  std::string_view body = token.substr(1, token.size() - 2);
  if (!body.empty() && body.front() == '/') body.remove_prefix(1);
  return tag_from_name(body).has_value();
}

std::string TokenizedTweet::render() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

nlohmann::json to_json(const TokenizedTweet& tweet) {
  nlohmann::json annotations = nlohmann::json::array();
  for (const auto& a : tweet.annotations)
    annotations.push_back({{"tag", tag_name(a.tag)}, {"begin", a.begin}, {"end", a.end}});
  return {{"tokens", tweet.tokens},
          {"annotations", std::move(annotations)},
          {"empty", tweet.empty()}};
}

std::string_view rule_name(Rule rule) {
  for (const auto& [r, name] : kRuleNames)
    if (r == rule) return name;
  return "unknown";
}

std::optional<Rule> rule_from_name(std::string_view name) {
  for (const auto& [r, n] : kRuleNames)
    if (n == name) return r;
  return std::nullopt;
}

std::span<const Rule> all_rules() { return kAllRules; }

WordSet parse_word_list(std::string_view text) {
  WordSet words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    if (!line.empty() && line.front() != '#') words.insert(ascii_lower(line));
    pos = end + 1;
  }
  return words;
}

WordSet load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open word list: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_word_list(buf.str());
}

std::shared_ptr<const WordSet> default_lexicon() {
  static const auto lexicon = std::make_shared<const WordSet>(parse_word_list(data::kLexicon));
  return lexicon;
}

std::shared_ptr<const WordSet> default_stopwords() {
  static const auto stopwords =
      std::make_shared<const WordSet>(parse_word_list(data::kStopwords));
  return stopwords;
}

bool PipelineConfig::has(Rule rule) const {
  return std::find(enabled_rules.begin(), enabled_rules.end(), rule) != enabled_rules.end();
}

void PipelineConfig::validate() const {
  for (std::size_t i = 0; i < enabled_rules.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (enabled_rules[j] == enabled_rules[i])
        throw ConfigError("duplicate preprocessing rule: " +
                          std::string(rule_name(enabled_rules[i])));
    if (enabled_rules[i] == Rule::kNormalizeEntities && i != 0)
      throw ConfigError("normalize_entities operates on raw text and must be the first rule");
  }
  if (!lexicon) throw ConfigError("pipeline config has no lexicon");
  if (!stopwords) throw ConfigError("pipeline config has no stopword list");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("preprocess config must be a JSON object");
  PipelineConfig config;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    if (doc.contains("rules")) {
      config.enabled_rules.clear();
      for (const auto& name : doc.at("rules")) {
        const auto rule = rule_from_name(name.get<std::string>());
        if (!rule) throw ConfigError("unknown preprocessing rule: " + name.get<std::string>());
        config.enabled_rules.push_back(*rule);
      }
    }
    if (doc.contains("lexicon")) {
      const auto src = doc.at("lexicon").get<std::string>();
      if (src != "builtin") {
        config.lexicon = std::make_shared<const WordSet>(load_word_list(resolve(src)));
        config.lexicon_source = src;
      }
    }
    if (doc.contains("stopwords")) {
      const auto src = doc.at("stopwords").get<std::string>();
      if (src == "none") {
        config.stopwords = std::make_shared<const WordSet>();
        config.stopwords_source = "none";
      } else if (src != "builtin") {
        config.stopwords = std::make_shared<const WordSet>(load_word_list(resolve(src)));
        config.stopwords_source = src;
      }
    }
    if (doc.contains("emoticons"))
      config.extra_emoticons = doc.at("emoticons").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed preprocess config: ") + e.what());
  }
  config.validate();
  return config;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open preprocess config: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("preprocess config " + path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

nlohmann::json PipelineConfig::to_json() const {
  std::vector<std::string> rules;
  for (Rule r : enabled_rules) rules.emplace_back(rule_name(r));
  return {{"rules", rules},
          {"lexicon", lexicon_source},
          {"stopwords", stopwords_source},
          {"emoticons", extra_emoticons},
          {"hash", hash()}};
}

std::string PipelineConfig::hash() const {
  Fnv1a h;
  h.update(std::string_view("preprocess/v1"));
  for (Rule r : enabled_rules) h.update(rule_name(r));
  auto hash_words = [&h](const WordSet* words) {
    if (!words) return;
    std::vector<std::string_view> sorted(words->begin(), words->end());
    std::sort(sorted.begin(), sorted.end());
    h.update(static_cast<std::uint64_t>(sorted.size()));
    for (auto w : sorted) h.update(w);
  };
  hash_words(lexicon.get());
  hash_words(stopwords.get());
  for (const auto& e : extra_emoticons) h.update(e);
  return h.hex();
}

std::vector<std::string> unpack_hashtag(std::string_view token, const WordSet& lexicon) {
  std::string_view body = token;
  if (!body.empty() && body.front() == '#') body.remove_prefix(1);

  bool has_upper = false;
  bool has_lower = false;
  for (char c : body) {
    has_upper |= is_upper(c);
    has_lower |= is_lower(c);
  }
  const bool mixed_case = has_upper && has_lower;

  std::vector<std::string> out{open_tag(Tag::kHashtag)};
  // Split into runs of word characters first; separators ('_', '-') are dropped.
  std::size_t i = 0;
  while (i < body.size()) {
    if (classify(static_cast<unsigned char>(body[i])) == CharClass::kSeparator) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < body.size() && classify(static_cast<unsigned char>(body[j])) != CharClass::kSeparator)
      ++j;
    const std::string_view run = body.substr(i, j - i);
    for (const auto& piece : camel_split(run)) {
      if (mixed_case || !is_alpha(piece.front())) {
        out.push_back(ascii_lower(piece));
      } else {
        for (auto& word : segment(piece, lexicon)) out.push_back(ascii_lower(word));
      }
    }
    i = j;
  }
  out.push_back(close_tag(Tag::kHashtag));
  return out;
}

ElongationResult reduce_elongated(std::string_view token, const WordSet& lexicon) {
  bool changed = false;
  std::string two = collapse_runs(token, 2, changed);
  if (!changed) return {std::string(token), false};
  if (lexicon.contains(ascii_lower(two))) return {std::move(two), true};
  bool unused = false;
  std::string one = collapse_runs(token, 1, unused);
  if (lexicon.contains(ascii_lower(one))) return {std::move(one), true};
  return {std::move(two), true};
}

std::vector<std::string> reduce_repeated(std::span<const std::string> tokens) {
  const std::string repeated = open_tag(Tag::kRepeated);
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t j = i + 1;
    while (j < tokens.size() && same_token(tokens[j], tokens[i])) ++j;
    if (j - i >= 2 && is_repeatable(tokens[i])) {
      out.push_back(repeated);
      out.push_back(tokens[i]);
    } else {
      out.insert(out.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i),
                 tokens.begin() + static_cast<std::ptrdiff_t>(j));
    }
    i = j;
  }
  return out;
}

TokenizedTweet preprocess(std::string_view text, const Pipeline& pipeline) {
  return pipeline.run(text);
}

}  // namespace tweetbench::preprocess
