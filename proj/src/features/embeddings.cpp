#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "tweetbench/common/error.hpp"
#include "tweetbench/common/hash.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/features.hpp"

namespace tweetbench::features {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool is_header(const std::vector<std::string_view>& fields) {
  long count = 0, dim = 0;
  return fields.size() == 2 && parse_number(fields[0], count) && parse_number(fields[1], dim) && dim > 0;
}

}  // namespace

bool EmbeddingTable::add(std::string token, VectorXd vector) {
  if (vector.size() != dimension_)
    throw DataError("embedding for '" + token + "' has dimension " + std::to_string(vector.size()) +
                    ", table has " + std::to_string(dimension_));
  const auto [it, inserted] = index_.try_emplace(std::move(token), vectors_.size());
  if (inserted) vectors_.push_back(std::move(vector));
  return inserted;
}

const VectorXd* EmbeddingTable::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

EmbeddingTable parse_embeddings(std::istream& in, std::string_view source, std::vector<std::string>* warnings) {
  std::optional<EmbeddingTable> table;
  std::string line;
  std::size_t line_no = 0;
  const auto where = [&] { return std::string(source) + ": line " + std::to_string(line_no) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (!table && line_no == 1 && is_header(fields)) continue;
    if (fields.size() < 2) throw DataError(where() + "expected a token followed by vector components");
    const auto dim = static_cast<Index>(fields.size() - 1);
    if (!table) table.emplace(dim);
    if (dim != table->dimension())
      throw DataError(where() + "ragged vector: " + std::to_string(dim) + " components, expected " +
                      std::to_string(table->dimension()));
    VectorXd v(dim);
    for (Index j = 0; j < dim; ++j) {
      const auto field = fields[static_cast<std::size_t>(j) + 1];
      if (!parse_number(field, v[j]) || !std::isfinite(v[j]))
        throw DataError(where() + "invalid component '" + std::string(field) + "'");
    }
    std::string token(fields[0]);
    if (!table->add(token, std::move(v)) && warnings)
      warnings->push_back(where() + "duplicate token '" + token + "' ignored");
  }
  if (!table) throw DataError(std::string(source) + ": no vectors");
  return std::move(*table);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings: " + path.string());
  return parse_embeddings(in, path.string(), warnings);
}

EmbeddingTable random_embeddings(std::span<const std::string> terms, Index dimension, std::uint64_t seed) {
  if (dimension < 1) throw ConfigError("embedding dimension must be >= 1");
  EmbeddingTable table(dimension);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dimension));
  for (const auto& t : terms) {
    // Per-term stream: a term's vector does not depend on the other terms.
    Rng rng(derive_seed(seed, fnv1a(t)));
    VectorXd v(dimension);
    for (Index j = 0; j < dimension; ++j) v[j] = scale * rng.normal();
    table.add(t, std::move(v));
  }
  return table;
}

VectorXd embed_document(const TokenList& doc, const EmbeddingTable& table, Pooling) {
  VectorXd sum = VectorXd::Zero(table.dimension());
  if (doc.empty()) return sum;
  for (const auto& tok : doc)
    if (const auto* v = table.find(tok)) sum += *v;
  return sum / static_cast<double>(doc.size());
}

MatrixXd embed_documents(std::span<const TokenList> docs, const EmbeddingTable& table, Pooling pooling) {
  MatrixXd out(static_cast<Index>(docs.size()), table.dimension());
  for (std::size_t i = 0; i < docs.size(); ++i)
    out.row(static_cast<Index>(i)) = embed_document(docs[i], table, pooling).transpose();
  return out;
}

}  // namespace tweetbench::features
