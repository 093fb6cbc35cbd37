#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/corpus.hpp"

namespace tweetbench::corpus {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

struct Record {
  std::size_t line;
  std::vector<std::string> fields;
};

// RFC 4180: quoted fields may contain separators, doubled quotes and newlines.
std::vector<Record> parse_delimited(std::string_view content, char sep, bool quoting) {
  std::vector<Record> records;
  std::size_t line = 1;
  std::size_t i = 0;
  if (content.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < content.size()) {
    Record rec{line, {}};
    std::string field;
    bool in_quotes = false;
    bool done = false;
    while (i < content.size() && !done) {
      const char c = content[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < content.size() && content[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
      } else if (quoting && c == '"' && field.empty()) {
        in_quotes = true;
      } else if (c == sep) {
        rec.fields.push_back(std::exchange(field, {}));
      } else if (c == '\n') {
        ++line;
        done = true;
      } else if (c != '\r') {
        field.push_back(c);
      }
      ++i;
    }
    if (in_quotes) throw DataError("line " + std::to_string(rec.line) + ": unterminated quoted field");
    rec.fields.push_back(std::move(field));
    const bool blank = rec.fields.size() == 1 && trim(rec.fields[0]).empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

std::vector<LabeledTweet> from_delimited(std::string_view content, char sep, bool quoting) {
  const auto records = parse_delimited(content, sep, quoting);
  if (records.empty()) throw DataError("no records");
  int id_col = -1, text_col = -1, label_col = -1;
  const auto& header = records.front().fields;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == "id") id_col = static_cast<int>(c);
    if (name == "text") text_col = static_cast<int>(c);
    if (name == "label") label_col = static_cast<int>(c);
  }
  if (text_col < 0 || label_col < 0)
    throw DataError("line 1: header must name 'text' and 'label' columns");
  if (records.size() == 1) throw DataError("no records");

  std::vector<LabeledTweet> tweets;
  tweets.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto where = "line " + std::to_string(rec.line) + ": ";
    const auto need = static_cast<std::size_t>(std::max({id_col, text_col, label_col}));
    if (rec.fields.size() <= need)
      throw DataError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(rec.fields.size()));
    LabeledTweet t;
    t.id = id_col >= 0 ? std::string(trim(rec.fields[id_col])) : std::to_string(r);
    t.text = rec.fields[text_col];
    t.label = std::string(trim(rec.fields[label_col]));
    if (trim(t.text).empty()) throw DataError(where + "missing or empty text");
    if (t.label.empty()) throw DataError(where + "missing or empty label");
    if (t.id.empty()) throw DataError(where + "empty id");
    tweets.push_back(std::move(t));
  }
  return tweets;
}

std::vector<LabeledTweet> from_jsonl(std::string_view content) {
  std::vector<LabeledTweet> tweets;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto raw = trim(content.substr(pos, end - pos));
    pos = end + 1;
    ++line;
    if (raw.empty()) continue;
    const auto where = "line " + std::to_string(line) + ": ";
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + "invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw DataError(where + "record must be a JSON object");
    auto field = [&](const char* key) -> std::string {
      if (!doc.contains(key) || doc[key].is_null()) return {};
      const auto& v = doc[key];
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number()) return v.dump();
      throw DataError(where + "field '" + key + "' must be a string");
    };
    LabeledTweet t{field("id"), field("text"), std::string(trim(field("label")))};
    if (t.id.empty()) t.id = std::to_string(tweets.size() + 1);
    if (trim(t.text).empty()) throw DataError(where + "missing or empty text");
    if (t.label.empty()) throw DataError(where + "missing or empty label");
    tweets.push_back(std::move(t));
  }
  if (tweets.empty()) throw DataError("no records");
  return tweets;
}

}  // namespace

Corpus::Corpus(std::vector<LabeledTweet> tweets) : tweets_(std::move(tweets)) {
  std::unordered_set<std::string> seen;
  label_ids_.reserve(tweets_.size());
  for (const auto& t : tweets_) {
    if (!seen.insert(t.id).second) throw DataError("duplicate tweet id: " + t.id);
    if (trim(t.text).empty()) throw DataError("tweet " + t.id + ": empty text");
    if (t.label.empty()) throw DataError("tweet " + t.id + ": empty label");
    auto [it, inserted] = label_lookup_.try_emplace(t.label, static_cast<int>(labels_.size()));
    if (inserted) labels_.push_back(t.label);
    label_ids_.push_back(it->second);
  }
}

int Corpus::label_index(std::string_view label) const {
  const auto it = label_lookup_.find(std::string(label));
  if (it == label_lookup_.end()) throw DataError("unknown label: " + std::string(label));
  return it->second;
}

std::vector<std::string> Corpus::texts() const {
  std::vector<std::string> out;
  out.reserve(tweets_.size());
  for (const auto& t : tweets_) out.push_back(t.text);
  return out;
}

std::string Corpus::content_hash() const {
  Fnv1a h;
  for (const auto& t : tweets_) h.update(t.id).update(t.text).update(t.label);
  return h.hex();
}

std::optional<Format> format_from_name(std::string_view name) {
  if (name == "csv") return Format::kCsv;
  if (name == "tsv") return Format::kTsv;
  if (name == "jsonl") return Format::kJsonl;
  return std::nullopt;
}

std::string_view format_name(Format format) {
  switch (format) {
    case Format::kCsv: return "csv";
    case Format::kTsv: return "tsv";
    case Format::kJsonl: return "jsonl";
  }
  return "csv";
}

Format format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".tsv") return Format::kTsv;
  if (ext == ".jsonl" || ext == ".json") return Format::kJsonl;
  return Format::kCsv;
}

Corpus parse_corpus(std::string_view content, Format format, std::string_view source) {
  try {
    switch (format) {
      case Format::kCsv: return Corpus(from_delimited(content, ',', true));
      case Format::kTsv: return Corpus(from_delimited(content, '\t', false));
      case Format::kJsonl: return Corpus(from_jsonl(content));
    }
  } catch (const DataError& e) {
    throw DataError(std::string(source) + ": " + e.what());
  }
  throw ConfigError("unknown dataset format");
}

Corpus load_corpus(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), format, path.string());
}

Corpus load_corpus(const std::filesystem::path& path) { return load_corpus(path, format_for_path(path)); }

}  // namespace tweetbench::corpus
