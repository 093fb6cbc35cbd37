#pragma once

// Small generated datasets and literal reference implementations shared by
// the unit tests and the acceptance runner.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tweetbench/classical.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/corpus.hpp"
#include "tweetbench/features.hpp"

namespace tbtest {

using tweetbench::Rng;

inline tweetbench::corpus::Corpus make_corpus(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::vector<tweetbench::corpus::LabeledTweet> tweets;
  for (std::size_t i = 0; i < rows.size(); ++i)
    tweets.push_back({"t" + std::to_string(i), rows[i].first, rows[i].second});
  return tweetbench::corpus::Corpus(std::move(tweets));
}

/// 2-6 classes, each with at least k tweets, shuffled.
inline tweetbench::corpus::Corpus random_corpus(Rng& rng, int k) {
  const int classes = 2 + static_cast<int>(rng.index(5));
  std::vector<std::pair<std::string, std::string>> rows;
  for (int c = 0; c < classes; ++c) {
    const auto n = static_cast<std::size_t>(k) + rng.index(20);
    for (std::size_t i = 0; i < n; ++i) rows.emplace_back("text " + std::to_string(rows.size()), "c" + std::to_string(c));
  }
  rng.shuffle(std::span(rows));
  return make_corpus(rows);
}

inline std::vector<tweetbench::features::TokenList> random_docs(Rng& rng, std::size_t n, std::size_t alphabet) {
  std::vector<tweetbench::features::TokenList> docs(n);
  for (auto& d : docs) {
    const auto len = rng.index(8);
    for (std::size_t i = 0; i < len; ++i) d.push_back("w" + std::to_string(rng.index(alphabet)));
  }
  return docs;
}

// Straight transcription of the weighting formula, no Eigen involved.
inline std::vector<std::map<std::string, double>> oracle_tfidf(const std::vector<tweetbench::features::TokenList>& docs) {
  const double n = static_cast<double>(docs.size());
  std::map<std::string, double> df;
  for (const auto& d : docs)
    for (const auto& t : std::set<std::string>(d.begin(), d.end())) df[t] += 1;
  std::vector<std::map<std::string, double>> rows;
  for (const auto& d : docs) {
    std::map<std::string, double> w;
    for (const auto& t : d) w[t] += 1;
    double norm = 0;
    for (auto& [t, v] : w) {
      v *= std::log((1 + n) / (1 + df[t])) + 1;
      norm += v * v;
    }
    for (auto& [t, v] : w) v /= std::sqrt(norm);
    rows.push_back(w);
  }
  return rows;
}

inline tweetbench::classical::SparseMatrix dense_rows(const std::vector<std::vector<double>>& rows) {
  using Eigen::Index;
  const auto cols = rows.empty() ? 0 : static_cast<Index>(rows[0].size());
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m.sparseView();
}

inline tweetbench::classical::SparseRow sparse(std::vector<double> v) {
  using Eigen::Index;
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Index>(v.size())).sparseView();
}

// Two Gaussian-ish blobs per class in d dimensions, classes separated along axis c.
inline void blobs(Rng& rng, int n_per_class, int k, int d, double gap, tweetbench::classical::SparseMatrix& X,
                  std::vector<int>& y) {
  using Eigen::Index;
  Eigen::MatrixXd m(n_per_class * k, d);
  y.clear();
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < n_per_class; ++i) {
      const Index r = c * n_per_class + i;
      for (Index j = 0; j < d; ++j) m(r, j) = 0.3 * rng.normal();
      m(r, c % d) += gap;
      y.push_back(c);
    }
  X = m.sparseView();
}

/// Brute-force multinomial NB class score: log prior plus x . log smoothed frequencies.
inline double mnb_oracle_score(const std::vector<std::vector<double>>& rows, const std::vector<int>& y, int k,
                               int c, double alpha, bool fit_prior, const std::vector<double>& query) {
  const std::size_t terms = query.size();
  double n_c = 0, docs_c = 0;
  std::vector<double> count(terms, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (y[i] == c) {
      docs_c += 1;
      for (std::size_t t = 0; t < terms; ++t) {
        count[t] += rows[i][t];
        n_c += rows[i][t];
      }
    }
  double score = fit_prior ? std::log(docs_c / static_cast<double>(rows.size())) : std::log(1.0 / k);
  for (std::size_t t = 0; t < terms; ++t)
    score += query[t] * std::log((count[t] + alpha) / (n_c + alpha * static_cast<double>(terms)));
  return score;
}

inline const std::vector<std::string>& toy_terms() {
  static const std::vector<std::string> terms{"good", "bad", "the", "a", "movie", "film", "was", "is", "very", "so"};
  return terms;
}

// Two classes that differ only in one signal word each; the rest is shared filler.
inline void signal_word_toy(Rng& rng, int n, std::vector<tweetbench::features::TokenList>& docs,
                            std::vector<int>& labels) {
  const auto& terms = toy_terms();
  docs.clear();
  labels.clear();
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    tweetbench::features::TokenList d;
    const auto len = 2 + rng.index(5);
    for (std::size_t t = 0; t < len; ++t) d.push_back(terms[2 + rng.index(terms.size() - 2)]);
    d.insert(d.begin() + static_cast<std::ptrdiff_t>(rng.index(d.size() + 1)), y == 0 ? "good" : "bad");
    docs.push_back(d);
    labels.push_back(y);
  }
}

// Pairs of texts share their filler words and differ only in a class keyword,
// so nothing but the keyword carries label information.
inline void keyword_toy(Rng& rng, int n, std::vector<std::string>& texts, std::vector<int>& labels) {
  static const std::vector<std::string> filler{"today", "really", "people", "new", "time",
                                               "just",  "watch",  "news",   "big", "week"};
  const std::vector<std::vector<std::string>> keywords{{"goal", "match", "striker"}, {"vote", "senate", "ballot"}};
  texts.clear();
  labels.clear();
  for (int i = 0; i < n / 2; ++i) {
    std::vector<std::string> words;
    const auto len = 2 + rng.index(4);
    for (std::size_t j = 0; j < len; ++j) words.push_back(filler[rng.index(filler.size())]);
    const auto at = static_cast<std::ptrdiff_t>(rng.index(len + 1));
    const auto kw = rng.index(3);
    for (int y = 0; y < 2; ++y) {
      auto tokens = words;
      tokens.insert(tokens.begin() + at, keywords[y][kw]);
      std::string t;
      for (const auto& w : tokens) t += (t.empty() ? "" : " ") + w;
      texts.push_back(t);
      labels.push_back(y);
    }
  }
}

}  // namespace tbtest
