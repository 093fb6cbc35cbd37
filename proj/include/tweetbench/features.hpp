#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "json.hpp"
#include "tweetbench/common/math.hpp"
#include "tweetbench/preprocess.hpp"

namespace tweetbench::features {

using TokenList = std::vector<std::string>;
using SparseRow = Eigen::SparseVector<double>;
/// Document-term matrix, one row per document.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Token lists of preprocessed tweets.
std::vector<TokenList> token_lists(std::span<const preprocess::TokenizedTweet> docs);

/// Lexicographically sorted term list with a term -> column index map.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> terms, int min_frequency);

  Index size() const { return static_cast<Index>(terms_.size()); }
  const std::vector<std::string>& terms() const { return terms_; }
  int min_frequency() const { return min_frequency_; }

  std::optional<Index> find(std::string_view term) const;
  std::string hash() const;

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, Index> index_;
  int min_frequency_ = 1;
};

/// Terms whose total occurrence count across `docs` is >= min_frequency.
/// Throws DataError when nothing survives, ConfigError when min_frequency < 1.
Vocabulary build_vocabulary(std::span<const TokenList> docs, int min_frequency = 1);
Vocabulary build_vocabulary(std::span<const preprocess::TokenizedTweet> docs, int min_frequency = 1);

/// Raw term counts; out-of-vocabulary tokens are ignored.
SparseRow bow_vector(const TokenList& doc, const Vocabulary& vocab);
SparseMatrix bow_matrix(std::span<const TokenList> docs, const Vocabulary& vocab);

/// Smoothed TF-IDF: w(t,d) = count(t,d) * (ln((1+N)/(1+df(t))) + 1), rows
/// L2-normalized (all-zero rows stay zero). IDF comes from the documents the
/// transformer was fitted on; transform() never refits.
class TfidfTransformer {
 public:
  static TfidfTransformer fit(std::span<const TokenList> docs, const Vocabulary& vocab);

  SparseRow transform(const TokenList& doc, const Vocabulary& vocab) const;
  SparseMatrix transform(std::span<const TokenList> docs, const Vocabulary& vocab) const;

  const VectorXd& idf() const { return idf_; }
  Index num_documents() const { return num_documents_; }
  std::string hash() const;

 private:
  VectorXd idf_;
  Index num_documents_ = 0;
};

/// Fit on `docs` and transform the same documents.
SparseMatrix tfidf_matrix(std::span<const TokenList> docs, const Vocabulary& vocab);

/// Token -> dense vector table with a fixed dimension.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(Index dimension = 0) : dimension_(dimension) {}

  Index dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }

  /// Returns false (and keeps the existing vector) for a duplicate token.
  bool add(std::string token, VectorXd vector);
  /// nullptr when the token is out of vocabulary.
  const VectorXd* find(std::string_view token) const;

 private:
  Index dimension_;
  std::vector<VectorXd> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Textual word-vector format: `token v1 ... vD` per line. A leading
/// "<count> <dim>" header line is skipped. Duplicate tokens keep the first
/// vector and add a warning; ragged or non-numeric lines raise DataError with
/// the line number.
EmbeddingTable parse_embeddings(std::istream& in, std::string_view source = "<stream>",
                                std::vector<std::string>* warnings = nullptr);
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::vector<std::string>* warnings = nullptr);

/// Seeded N(0, 1/dim) vectors for `terms`, each drawn from its own (seed, term)
/// stream; stands in for pretrained vectors in smoke runs.
EmbeddingTable random_embeddings(std::span<const std::string> terms, Index dimension, std::uint64_t seed);

enum class Pooling { kMean };

/// Mean of token vectors. OOV tokens contribute zero but still count in the
/// denominator; empty documents map to the zero vector.
VectorXd embed_document(const TokenList& doc, const EmbeddingTable& table, Pooling pooling = Pooling::kMean);
MatrixXd embed_documents(std::span<const TokenList> docs, const EmbeddingTable& table,
                         Pooling pooling = Pooling::kMean);

nlohmann::json to_json(const SparseRow& row);
nlohmann::json to_json(const VectorXd& row);
/// One JSON object per row: {"row": i, "dim": D, "entries": {...}}.
void write_jsonl(std::ostream& out, const SparseMatrix& rows);

}  // namespace tweetbench::features
