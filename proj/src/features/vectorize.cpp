#include <algorithm>
#include <map>
#include <ostream>

#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/features.hpp"

namespace tweetbench::features {

namespace {

// Column -> count, ordered by column so rows are built in index order.
std::map<Index, double> count_terms(const TokenList& doc, const Vocabulary& vocab) {
  std::map<Index, double> counts;
  for (const auto& tok : doc)
    if (const auto col = vocab.find(tok)) counts[*col] += 1.0;
  return counts;
}

SparseMatrix stack_rows(std::span<const SparseRow> rows, Index cols) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (SparseRow::InnerIterator it(rows[r]); it; ++it)
      triplets.emplace_back(static_cast<Index>(r), it.index(), it.value());
  SparseMatrix m(static_cast<Index>(rows.size()), cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

std::vector<TokenList> token_lists(std::span<const preprocess::TokenizedTweet> docs) {
  std::vector<TokenList> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.tokens);
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> terms, int min_frequency)
    : terms_(std::move(terms)), min_frequency_(min_frequency) {
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
  for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], static_cast<Index>(i));
}

std::optional<Index> Vocabulary::find(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::hash() const {
  Fnv1a h;
  h.update(min_frequency_);
  for (const auto& t : terms_) h.update(t);
  return h.hex();
}

Vocabulary build_vocabulary(std::span<const TokenList> docs, int min_frequency) {
  if (min_frequency < 1) throw ConfigError("min_frequency must be >= 1");
  std::map<std::string, int> freq;
  for (const auto& doc : docs)
    for (const auto& tok : doc) ++freq[tok];
  std::vector<std::string> terms;
  for (const auto& [term, n] : freq)
    if (n >= min_frequency) terms.push_back(term);
  if (terms.empty()) throw DataError("empty vocabulary");
  return Vocabulary(std::move(terms), min_frequency);
}

Vocabulary build_vocabulary(std::span<const preprocess::TokenizedTweet> docs, int min_frequency) {
  const auto lists = token_lists(docs);
  return build_vocabulary(std::span<const TokenList>(lists), min_frequency);
}

SparseRow bow_vector(const TokenList& doc, const Vocabulary& vocab) {
  SparseRow row(vocab.size());
  for (const auto& [col, n] : count_terms(doc, vocab)) row.insertBack(col) = n;
  return row;
}

SparseMatrix bow_matrix(std::span<const TokenList> docs, const Vocabulary& vocab) {
  std::vector<SparseRow> rows;
  rows.reserve(docs.size());
  for (const auto& d : docs) rows.push_back(bow_vector(d, vocab));
  return stack_rows(rows, vocab.size());
}

TfidfTransformer TfidfTransformer::fit(std::span<const TokenList> docs, const Vocabulary& vocab) {
  if (docs.empty()) throw DataError("tf-idf needs at least one document");
  VectorXd df = VectorXd::Zero(vocab.size());
  for (const auto& d : docs)
    for (const auto& [col, n] : count_terms(d, vocab)) df[col] += 1.0;
  TfidfTransformer t;
  t.num_documents_ = static_cast<Index>(docs.size());
  const double n1 = 1.0 + static_cast<double>(docs.size());
  t.idf_ = ((n1 / (df.array() + 1.0)).log() + 1.0).matrix();
  return t;
}

SparseRow TfidfTransformer::transform(const TokenList& doc, const Vocabulary& vocab) const {
  if (idf_.size() != vocab.size()) throw DataError("tf-idf transformer was fitted on a different vocabulary");
  SparseRow row(vocab.size());
  for (const auto& [col, n] : count_terms(doc, vocab)) row.insertBack(col) = n * idf_[col];
  const double norm = row.norm();
  if (norm > 0.0) row /= norm;
  return row;
}

SparseMatrix TfidfTransformer::transform(std::span<const TokenList> docs, const Vocabulary& vocab) const {
  std::vector<SparseRow> rows;
  rows.reserve(docs.size());
  for (const auto& d : docs) rows.push_back(transform(d, vocab));
  return stack_rows(rows, vocab.size());
}

std::string TfidfTransformer::hash() const {
  Fnv1a h;
  h.update(static_cast<std::int64_t>(num_documents_)).update_dense(idf_);
  return h.hex();
}

SparseMatrix tfidf_matrix(std::span<const TokenList> docs, const Vocabulary& vocab) {
  return TfidfTransformer::fit(docs, vocab).transform(docs, vocab);
}

nlohmann::json to_json(const SparseRow& row) {
  nlohmann::json entries = nlohmann::json::object();
  for (SparseRow::InnerIterator it(row); it; ++it) entries[std::to_string(it.index())] = it.value();
  return {{"dim", row.size()}, {"entries", std::move(entries)}};
}

nlohmann::json to_json(const VectorXd& row) {
  return {{"dim", row.size()}, {"values", std::vector<double>(row.data(), row.data() + row.size())}};
}

void write_jsonl(std::ostream& out, const SparseMatrix& rows) {
  for (Index r = 0; r < rows.rows(); ++r) {
    SparseRow row = rows.row(r).transpose();
    auto doc = to_json(row);
    doc["row"] = r;
    out << doc.dump() << '\n';
  }
}

}  // namespace tweetbench::features
