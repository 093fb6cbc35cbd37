#include <regex>
#include <utility>

#include "tweetbench/common/error.hpp"
#include "tweetbench/preprocess.hpp"
#include "text_util.hpp"

namespace tweetbench::preprocess {

namespace {

// Entity table. Order breaks ties between equally long matches.
struct EntitySpec {
  Tag tag;
  const char* pattern;
};

constexpr const char* kAmPm = "(?:am|pm|a\\.m\\.|p\\.m\\.)";
constexpr const char* kMonth =
    "(?:jan|feb|mar|apr|may|jun|jul|aug|sep|sept|oct|nov|dec)[a-z]*\\.?";

std::vector<EntitySpec> entity_specs() {
  static const std::string time_a = std::string("[0-9]{1,2}(?::[0-9]{2}){1,2}(?:\\s?") + kAmPm + ")?";
  static const std::string time_b = std::string("[0-9]{1,2}\\s?") + kAmPm;
  static const std::string date_b = std::string(kMonth) + "\\s[0-9]{1,2}(?:st|nd|rd|th)?(?:,?\\s[0-9]{4})?";
  static const std::string date_c = std::string("[0-9]{1,2}(?:st|nd|rd|th)?\\s") + kMonth + "(?:\\s[0-9]{4})?";
  return {
      {Tag::kUrl, "(?:https?://|www\\.)[^\\s]+"},
      {Tag::kEmail, "[a-z0-9._%+\\-]+@[a-z0-9\\-]+(?:\\.[a-z0-9\\-]+)+"},
      {Tag::kUser, "@[a-z0-9_]+"},
      {Tag::kPercent, "[0-9]+(?:[.,][0-9]+)?\\s?(?:%|percent\\b|pct\\b)"},
      {Tag::kMoney, "(?:\\$|€|£|¥)[0-9]+(?:[.,][0-9]+)*(?:k|m|bn|b)?"},
      {Tag::kMoney,
       "[0-9]+(?:[.,][0-9]+)*\\s?(?:\\$|€|£|dollars?\\b|usd\\b|euros?\\b|eur\\b|pounds?\\b|gbp\\b)"},
      {Tag::kTime, time_a.c_str()},
      {Tag::kTime, time_b.c_str()},
      {Tag::kDate, "[0-9]{1,4}[/\\-.][0-9]{1,2}[/\\-.][0-9]{1,4}"},
      {Tag::kDate, date_b.c_str()},
      {Tag::kDate, date_c.c_str()},
      {Tag::kPhone,
       "(?:\\+?[0-9]{1,3}[\\s.\\-]?)?(?:\\([0-9]{3}\\)|[0-9]{3})[\\s.\\-]?[0-9]{3}[\\s.\\-]?[0-9]{4}"},
      {Tag::kNumber, "[0-9]+(?:[.,][0-9]+)*"},
  };
}

// Emoticons must stand alone (whitespace or text edge on both sides).
const char* const kEmoticons[] = {
    "[:;=8xX][\\-o\\*'^]?[\\)\\]\\(\\[dDpP/\\\\|\\}\\{@3><]+",
    "[\\)\\]\\(\\[dDpP\\\\|\\}\\{@><]+[\\-o\\*'^]?[:;=8]",
    "<[/\\\\]?3+",
    "\\^[_\\-.]?\\^",
    "[oO0][._][oO0]",
    "-_-",
    "[tT]_[tT]",
    ":'\\(",
};

enum class SegKind { kWhitespace, kWord, kHashtag, kPlaceholder, kPunct, kConsumed, kDiscarded };

struct Segment {
  SegKind kind;
  std::string text;
  std::size_t bytes;
};

struct Piece {
  std::string text;
  bool tag = false;
  bool hashtag = false;
  bool elongated = false;
};

// Length of a literal "<tag>" / "</tag>" at position i, or 0.
std::size_t match_literal_tag(std::string_view s, std::size_t i) {
  const auto close = s.find('>', i);
  if (close == std::string_view::npos || close - i > 16) return 0;
  const auto candidate = s.substr(i, close - i + 1);
  if (!is_tag_token(candidate)) return 0;
  // <elongated> is an annotation only and never a token.
  if (candidate == "<elongated>" || candidate == "</elongated>") return 0;
  return candidate.size();
}

bool word_at(std::string_view s, std::size_t i) {
  return i < s.size() && is_word_cp(decode_utf8(s, i).value);
}

bool is_apostrophe(std::string_view s, std::size_t i, std::size_t& len) {
  if (s[i] == '\'') {
    len = 1;
    return true;
  }
  const auto cp = decode_utf8(s, i);
  if (cp.value == 0x2019) {
    len = cp.length;
    return true;
  }
  return false;
}

}  // namespace

struct Pipeline::Tables {
  struct Entity {
    Tag tag;
    std::regex re;
  };
  std::vector<Entity> entities;
  std::vector<std::regex> emoticons;

  explicit Tables(const PipelineConfig& config) {
    const auto flags = std::regex::ECMAScript | std::regex::icase | std::regex::optimize;
    for (const auto& spec : entity_specs()) entities.push_back({spec.tag, std::regex(spec.pattern, flags)});
    for (const char* p : kEmoticons) emoticons.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    for (const auto& p : config.extra_emoticons) {
      try {
        emoticons.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw ConfigError("invalid emoticon pattern '" + p + "': " + e.what());
      }
    }
  }
};

Pipeline::Pipeline() : Pipeline(PipelineConfig{}) {}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  config_.validate();
  tables_ = std::make_unique<const Tables>(config_);
}

Pipeline::~Pipeline() = default;
Pipeline::Pipeline(Pipeline&&) noexcept = default;
Pipeline& Pipeline::operator=(Pipeline&&) noexcept = default;

namespace {

class Scanner {
 public:
  Scanner(std::string_view text, const PipelineConfig& config,
          const std::vector<std::regex>& emoticons,
          const std::vector<std::pair<Tag, const std::regex*>>& entities, bool normalize)
      : s_(text), config_(config), emoticons_(emoticons), entities_(entities), normalize_(normalize) {}

  std::vector<Segment> run() {
    while (i_ < s_.size()) step();
    return std::move(out_);
  }

 private:
  void emit(SegKind kind, std::size_t len, std::string text = {}) {
    if (text.empty() && (kind == SegKind::kWord || kind == SegKind::kHashtag || kind == SegKind::kPunct))
      text = std::string(s_.substr(i_, len));
    out_.push_back({kind, std::move(text), len});
    i_ += len;
  }

  std::size_t longest(const std::regex& re, bool (Scanner::*end_ok)(std::size_t) const) const {
    std::match_results<std::string_view::const_iterator> m;
    auto flags = std::regex_constants::match_continuous;
    if (i_ > 0) flags |= std::regex_constants::match_prev_avail;
    if (!std::regex_search(s_.begin() + static_cast<std::ptrdiff_t>(i_), s_.end(), m, re, flags)) return 0;
    const auto len = static_cast<std::size_t>(m.length(0));
    if (len == 0 || !(this->*end_ok)(i_ + len)) return 0;
    return len;
  }

  bool space_end(std::size_t end) const { return end == s_.size() || is_space(s_[end]); }
  bool word_end(std::size_t end) const { return !word_at(s_, end); }

  bool try_emoticon() {
    if (i_ > 0 && !is_space(s_[i_ - 1])) return false;
    std::size_t best = 0;
    for (const auto& re : emoticons_) best = std::max(best, longest(re, &Scanner::space_end));
    if (best == 0) return false;
    emit(SegKind::kDiscarded, best);
    return true;
  }

  bool try_entity() {
    if (i_ > 0 && word_at(s_, prev_start())) return false;
    std::size_t best = 0;
    Tag tag = Tag::kNumber;
    for (const auto& [t, re] : entities_) {
      const auto len = longest(*re, &Scanner::word_end);
      if (len > best) {
        best = len;
        tag = t;
      }
    }
    if (best == 0) return false;
    emit(SegKind::kPlaceholder, best, open_tag(tag));
    return true;
  }

  std::size_t prev_start() const {
    std::size_t j = i_ - 1;
    while (j > 0 && (static_cast<unsigned char>(s_[j]) & 0xC0) == 0x80) --j;
    return j;
  }

  std::size_t word_length(std::size_t from) const {
    std::size_t j = from;
    while (j < s_.size()) {
      std::size_t apo = 0;
      if (word_at(s_, j)) {
        j += decode_utf8(s_, j).length;
      } else if (j > from && is_apostrophe(s_, j, apo) && word_at(s_, j + apo)) {
        j += apo;
      } else {
        break;
      }
    }
    return j - from;
  }

  bool is_removable_word(std::string_view word) const {
    const std::string lower = ascii_lower(word);
    if (config_.stopwords->contains(lower)) return true;
    if (config_.has(Rule::kReduceElongated)) {
      const auto reduced = reduce_elongated(lower, *config_.lexicon);
      if (reduced.annotated && config_.stopwords->contains(reduced.token)) return true;
    }
    return false;
  }

  void step() {
    if (is_space(s_[i_])) {
      std::size_t j = i_;
      while (j < s_.size() && is_space(s_[j])) ++j;
      emit(SegKind::kWhitespace, j - i_);
      return;
    }
    if (s_[i_] == '<') {
      if (const auto len = match_literal_tag(s_, i_)) {
        const std::string tag(s_.substr(i_, len));
        if (tag == "<hashtag>") protected_ = true;
        if (tag == "</hashtag>") protected_ = false;
        emit(SegKind::kPlaceholder, len, tag);
        return;
      }
    }
    const bool rules = normalize_ && !protected_;
    if (rules && (try_emoticon() || try_entity())) return;

    const auto cp = decode_utf8(s_, i_);
    if (is_emoji(cp.value)) {
      emit(normalize_ ? SegKind::kDiscarded : SegKind::kPunct, cp.length);
      return;
    }
    if (s_[i_] == '#' && word_at(s_, i_ + 1)) {
      emit(SegKind::kHashtag, 1 + word_length(i_ + 1));
      return;
    }
    if (is_word_cp(cp.value)) {
      const auto len = word_length(i_);
      const auto word = s_.substr(i_, len);
      if (rules && ascii_lower(word) == "rt") {
        emit(SegKind::kConsumed, len);
      } else if (rules && is_removable_word(word)) {
        emit(SegKind::kDiscarded, len);
      } else {
        emit(SegKind::kWord, len);
      }
      return;
    }
    emit(SegKind::kPunct, cp.length);
  }

  std::string_view s_;
  const PipelineConfig& config_;
  const std::vector<std::regex>& emoticons_;
  const std::vector<std::pair<Tag, const std::regex*>>& entities_;
  bool normalize_;
  bool protected_ = false;
  std::size_t i_ = 0;
  std::vector<Segment> out_;
};

}  // namespace

namespace {

std::vector<Segment> scan_text(std::string_view text, const PipelineConfig& config,
                               const std::vector<std::regex>& emoticons,
                               const std::vector<std::pair<Tag, const std::regex*>>& entities,
                               bool normalize) {
  return Scanner(text, config, emoticons, entities, normalize).run();
}

std::vector<std::pair<Tag, const std::regex*>> entity_refs(const auto& entities) {
  std::vector<std::pair<Tag, const std::regex*>> refs;
  refs.reserve(entities.size());
  for (const auto& e : entities) refs.emplace_back(e.tag, &e.re);
  return refs;
}

}  // namespace

std::string Pipeline::normalize_entities(std::string_view text) const {
  const auto refs = entity_refs(tables_->entities);
  const auto segments = scan_text(text, config_, tables_->emoticons, refs, true);
  std::string out;
  bool pending_space = false;
  for (const auto& seg : segments) {
    switch (seg.kind) {
      case SegKind::kWhitespace:
      case SegKind::kConsumed:
      case SegKind::kDiscarded:
        // Removed spans still separate their neighbours.
        pending_space = true;
        break;
      default:
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out += seg.text;
    }
  }
  return out;
}

TokenizedTweet Pipeline::run(std::string_view text) const {
  TokenizedTweet result;
  auto& acc = result.accounting;

  const auto refs = entity_refs(tables_->entities);
  const auto segments =
      scan_text(text, config_, tables_->emoticons, refs, config_.has(Rule::kNormalizeEntities));

  std::vector<Piece> pieces;
  for (const auto& seg : segments) {
    switch (seg.kind) {
      case SegKind::kWhitespace:
      case SegKind::kPunct:
      case SegKind::kConsumed:
        acc.consumed += seg.bytes;
        break;
      case SegKind::kDiscarded:
        acc.discarded += seg.bytes;
        break;
      case SegKind::kPlaceholder:
        acc.consumed += seg.bytes;
        pieces.push_back({seg.text, true});
        break;
      case SegKind::kWord:
        acc.emitted += seg.bytes;
        pieces.push_back({seg.text});
        break;
      case SegKind::kHashtag:
        acc.consumed += 1;
        acc.emitted += seg.bytes - 1;
        pieces.push_back({seg.text.substr(1), false, true});
        break;
    }
  }

  auto drop_emitted = [&acc](std::size_t n) {
    acc.emitted -= n;
    acc.consumed += n;
  };

  for (Rule rule : config_.enabled_rules) {
    switch (rule) {
      case Rule::kNormalizeEntities:
        break;
      case Rule::kUnpackHashtags: {
        std::vector<Piece> next;
        for (auto& p : pieces) {
          if (!p.hashtag) {
            next.push_back(std::move(p));
            continue;
          }
          std::size_t kept = 0;
          for (auto& word : unpack_hashtag("#" + p.text, *config_.lexicon)) {
            const bool tag = is_tag_token(word);
            if (!tag) kept += word.size();
            next.push_back({std::move(word), tag});
          }
          drop_emitted(p.text.size() - kept);
        }
        pieces = std::move(next);
        break;
      }
      case Rule::kReduceElongated:
        for (auto& p : pieces) {
          if (p.tag) continue;
          auto reduced = reduce_elongated(p.text, *config_.lexicon);
          if (!reduced.annotated) continue;
          drop_emitted(p.text.size() - reduced.token.size());
          p.text = std::move(reduced.token);
          p.elongated = true;
        }
        break;
      case Rule::kReduceRepeated: {
        std::vector<Piece> next;
        std::size_t i = 0;
        while (i < pieces.size()) {
          std::size_t j = i + 1;
          while (j < pieces.size() && same_token(pieces[j].text, pieces[i].text)) ++j;
          if (j - i >= 2 && is_repeatable(pieces[i].text)) {
            Piece kept = pieces[i];
            for (std::size_t k = i + 1; k < j; ++k) {
              kept.elongated |= pieces[k].elongated;
              if (!pieces[k].tag) drop_emitted(pieces[k].text.size());
            }
            next.push_back({open_tag(Tag::kRepeated), true});
            next.push_back(std::move(kept));
          } else {
            for (std::size_t k = i; k < j; ++k) next.push_back(std::move(pieces[k]));
          }
          i = j;
        }
        pieces = std::move(next);
        break;
      }
      case Rule::kLowercase:
        for (auto& p : pieces)
          if (!p.tag) p.text = ascii_lower(p.text);
        break;
    }
  }

  const std::string hashtag_close = close_tag(Tag::kHashtag);
  result.tokens.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    if (p.tag) {
      const std::string_view body = std::string_view(p.text).substr(1, p.text.size() - 2);
      if (body == "hashtag") {
        std::size_t close = i;
        while (close < pieces.size() && pieces[close].text != hashtag_close) ++close;
        result.annotations.push_back({Tag::kHashtag, i, close < pieces.size() ? close + 1 : i + 1});
      } else if (body == "repeated") {
        result.annotations.push_back({Tag::kRepeated, i, std::min(i + 2, pieces.size())});
      } else if (body.front() != '/') {
        if (const auto tag = tag_from_name(body)) result.annotations.push_back({*tag, i, i + 1});
      }
    }
    if (p.elongated) result.annotations.push_back({Tag::kElongated, i, i + 1});
    result.tokens.push_back(p.text);
  }
  return result;
}

}  // namespace tweetbench::preprocess
