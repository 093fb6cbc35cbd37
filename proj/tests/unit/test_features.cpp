#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support/toys.hpp"
#include "tweetbench/common/error.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/features.hpp"

using namespace tweetbench;
using namespace tweetbench::features;

namespace {

std::map<Index, double> entries(const SparseRow& row) {
  std::map<Index, double> out;
  for (SparseRow::InnerIterator it(row); it; ++it) out[it.index()] = it.value();
  return out;
}

}  // namespace

using tbtest::oracle_tfidf;
using tbtest::random_docs;

TEST_CASE("build_vocabulary") {
  const std::vector<TokenList> docs{{"a", "b", "a"}, {"b", "c"}};
  CHECK(build_vocabulary(docs).terms() == std::vector<std::string>{"a", "b", "c"});
  CHECK(build_vocabulary(docs, 2).terms() == std::vector<std::string>{"a", "b"});
  const std::vector<TokenList> unique{{"x", "y"}, {"z"}};
  CHECK_THROWS_WITH_AS(build_vocabulary(unique, 2), doctest::Contains("empty vocabulary"), DataError);
  CHECK_THROWS_AS(build_vocabulary(docs, 0), ConfigError);

  const auto v = build_vocabulary(docs);
  for (Index i = 0; i < v.size(); ++i) CHECK(*v.find(v.terms()[static_cast<std::size_t>(i)]) == i);
  CHECK_FALSE(v.find("zzz").has_value());
  CHECK(v.hash() == build_vocabulary(docs).hash());
  CHECK(v.hash() != build_vocabulary(docs, 2).hash());
}

TEST_CASE("bow_vector") {
  const auto vocab = Vocabulary({"a", "b", "c"}, 1);
  CHECK(entries(bow_vector({"a", "b", "a"}, vocab)) == std::map<Index, double>{{0, 2.0}, {1, 1.0}});
  CHECK(bow_vector({}, vocab).nonZeros() == 0);
  CHECK(bow_vector({"z"}, vocab).nonZeros() == 0);
  CHECK(bow_vector({"z"}, vocab).size() == 3);

  Rng rng(9);
  const auto vocab2 = Vocabulary({"w0", "w1", "w2", "w3", "w4"}, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto docs = random_docs(rng, 2, 7);
    TokenList joined = docs[0];
    joined.insert(joined.end(), docs[1].begin(), docs[1].end());
    const SparseRow sum = bow_vector(docs[0], vocab2) + bow_vector(docs[1], vocab2);
    CHECK(entries(bow_vector(joined, vocab2)) == entries(sum));
  }
  const auto m = bow_matrix(std::vector<TokenList>{{"a"}, {"c", "c"}}, vocab);
  CHECK(m.rows() == 2);
  CHECK(m.coeff(1, 2) == 2.0);
}

TEST_CASE("tfidf examples") {
  const std::vector<TokenList> docs{{"a"}, {"a", "b"}};
  const auto vocab = build_vocabulary(docs);
  const auto t = TfidfTransformer::fit(docs, vocab);
  CHECK(t.idf()[0] == doctest::Approx(1.0));
  CHECK(t.idf()[1] == doctest::Approx(1.4054651081081644));
  const auto row = entries(t.transform(docs[1], vocab));
  const double norm = std::sqrt(1.0 + 1.4054651081081644 * 1.4054651081081644);
  CHECK(row.at(0) == doctest::Approx(1.0 / norm));
  CHECK(row.at(1) == doctest::Approx(1.4054651081081644 / norm));
  CHECK(t.transform(TokenList{}, vocab).nonZeros() == 0);
  CHECK_THROWS_AS(TfidfTransformer::fit(std::vector<TokenList>{}, vocab), DataError);
}

TEST_CASE("tfidf matches the formula on random corpora") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto docs = random_docs(rng, 3 + rng.index(15), 2 + rng.index(10));
    docs[0].push_back("w0");
    const auto vocab = build_vocabulary(docs);
    const auto m = tfidf_matrix(docs, vocab);
    const auto expected = oracle_tfidf(docs);
    for (std::size_t r = 0; r < docs.size(); ++r) {
      double norm2 = 0;
      for (Index c = 0; c < vocab.size(); ++c) {
        const auto& term = vocab.terms()[static_cast<std::size_t>(c)];
        const auto it = expected[r].find(term);
        const double want = it == expected[r].end() ? 0.0 : it->second;
        CHECK(m.coeff(static_cast<Index>(r), c) == doctest::Approx(want).epsilon(1e-12));
        norm2 += m.coeff(static_cast<Index>(r), c) * m.coeff(static_cast<Index>(r), c);
      }
      if (!docs[r].empty()) CHECK(std::abs(std::sqrt(norm2) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("tfidf train/validation hygiene") {
  Rng rng(4);
  auto train = random_docs(rng, 30, 12);
  train[0].push_back("w1");
  const auto valid = random_docs(rng, 10, 15);
  const auto vocab = build_vocabulary(train);
  const auto t = TfidfTransformer::fit(train, vocab);
  const SparseMatrix stored = t.transform(valid, vocab);
  // Refit on the same training docs: validation rows must not move.
  const auto again = TfidfTransformer::fit(train, vocab).transform(valid, vocab);
  CHECK(SparseMatrix(stored - again).norm() == 0.0);
  CHECK(t.num_documents() == 30);
  CHECK(t.hash() == TfidfTransformer::fit(train, vocab).hash());
  // Refitting with the validation docs included changes the weights.
  auto all = train;
  all.insert(all.end(), valid.begin(), valid.end());
  CHECK(t.hash() != TfidfTransformer::fit(all, vocab).hash());
}

TEST_CASE("load_embeddings") {
  SUBCASE("basic") {
    std::istringstream in("a 1 0\nb 0 1\n");
    const auto t = parse_embeddings(in);
    CHECK(t.dimension() == 2);
    CHECK(t.size() == 2);
    CHECK((*t.find("b"))[1] == 1.0);
    CHECK(t.find("c") == nullptr);
  }
  SUBCASE("ragged line reports its line number") {
    std::istringstream in("a 1 0\nb 0 1\nc 1\n");
    CHECK_THROWS_WITH_AS(parse_embeddings(in), doctest::Contains("line 3"), DataError);
  }
  SUBCASE("header line is skipped") {
    std::istringstream in("2 3\na 1 2 3\nb 4 5 6\n");
    const auto t = parse_embeddings(in);
    CHECK(t.dimension() == 3);
    CHECK(t.size() == 2);
  }
  SUBCASE("duplicates keep the first vector") {
    std::istringstream in("a 1 0\na 5 5\n");
    std::vector<std::string> warnings;
    const auto t = parse_embeddings(in, "x.txt", &warnings);
    CHECK(t.size() == 1);
    CHECK((*t.find("a"))[0] == 1.0);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("line 2") != std::string::npos);
  }
  SUBCASE("bad number") {
    std::istringstream in("a 1 x\n");
    CHECK_THROWS_WITH_AS(parse_embeddings(in), doctest::Contains("line 1"), DataError);
  }
  SUBCASE("300 dimensional rows") {
    std::ostringstream file;
    for (int w = 0; w < 3; ++w) {
      file << "w" << w;
      for (int j = 0; j < 300; ++j) file << ' ' << (j * 0.001);
      file << '\n';
    }
    std::istringstream in(file.str());
    CHECK(parse_embeddings(in).dimension() == 300);
  }
  CHECK_THROWS_AS(load_embeddings("/nonexistent/vectors.txt"), DataError);
}

TEST_CASE("embed_document") {
  EmbeddingTable t(2);
  t.add("a", Eigen::Vector2d(1, 0));
  t.add("b", Eigen::Vector2d(0, 1));
  CHECK(embed_document({"a", "b"}, t).isApprox(Eigen::Vector2d(0.5, 0.5)));
  CHECK(embed_document({"a"}, t).isApprox(Eigen::Vector2d(1, 0)));
  CHECK(embed_document({"x", "y"}, t).isZero());
  CHECK(embed_document({}, t).isZero());
  CHECK(embed_document({"a", "zzz"}, t).isApprox(Eigen::Vector2d(0.5, 0)));

  Rng rng(12);
  const std::vector<std::string> terms{"w0", "w1", "w2", "w3"};
  const auto table = random_embeddings(terms, 16, 3);
  for (int trial = 0; trial < 30; ++trial) {
    auto doc = random_docs(rng, 1, 6)[0];
    const VectorXd before = embed_document(doc, table);
    rng.shuffle(std::span(doc));
    CHECK((embed_document(doc, table) - before).norm() < 1e-12);
  }
  const auto m = embed_documents(std::vector<TokenList>{{"w0"}, {}}, table);
  CHECK(m.rows() == 2);
  CHECK(m.row(1).isZero());
  CHECK(random_embeddings(terms, 16, 3).find("w2")->isApprox(*table.find("w2")));
  // A term's vector ignores which other terms are present.
  const std::vector<std::string> just_w2{"w2"};
  CHECK(random_embeddings(just_w2, 16, 3).find("w2")->isApprox(*table.find("w2")));
  CHECK_FALSE(random_embeddings(just_w2, 16, 4).find("w2")->isApprox(*table.find("w2")));
}

TEST_CASE("jsonl export") {
  const auto vocab = Vocabulary({"a", "b"}, 1);
  std::ostringstream out;
  write_jsonl(out, bow_matrix(std::vector<TokenList>{{"b", "b"}, {}}, vocab));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  const auto doc = nlohmann::json::parse(line);
  CHECK(doc["row"] == 0);
  CHECK(doc["dim"] == 2);
  CHECK(doc["entries"]["1"] == 2.0);
  std::getline(in, line);
  CHECK(nlohmann::json::parse(line)["entries"].empty());
}
