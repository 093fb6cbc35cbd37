#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "tweetbench/corpus.hpp"

namespace tweetbench::corpus {

namespace {

std::string fixed2(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  return out.str();
}

}  // namespace

std::size_t CorpusStats::minority_class() const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < per_class.size(); ++c)
    if (per_class[c].second.n_tweets < per_class[best].second.n_tweets) best = c;
  return best;
}

std::size_t CorpusStats::majority_class() const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < per_class.size(); ++c)
    if (per_class[c].second.n_tweets > per_class[best].second.n_tweets) best = c;
  return best;
}

CorpusStats compute_stats(const Corpus& corpus, const preprocess::Pipeline& pipeline) {
  CorpusStats stats;
  std::unordered_set<std::string> vocab;
  std::vector<std::unordered_set<std::string>> class_vocab(corpus.num_classes());
  for (const auto& label : corpus.labels()) stats.per_class.emplace_back(label, ClassStats{});

  const auto& label_ids = corpus.label_ids();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto tokens = pipeline.run(corpus.tweets()[i].text).tokens;
    auto& cls = stats.per_class[label_ids[i]].second;
    ++cls.n_tweets;
    for (const auto& tok : tokens) {
      if (preprocess::is_tag_token(tok)) continue;
      ++stats.word_count;
      ++cls.word_count;
      vocab.insert(tok);
      class_vocab[label_ids[i]].insert(tok);
    }
  }
  stats.n_tweets = corpus.size();
  stats.unique_words = vocab.size();
  stats.avg_words_per_tweet =
      stats.n_tweets ? static_cast<double>(stats.word_count) / static_cast<double>(stats.n_tweets) : 0.0;
  for (std::size_t c = 0; c < stats.per_class.size(); ++c) {
    auto& cls = stats.per_class[c].second;
    cls.unique_words = class_vocab[c].size();
    cls.avg_words = cls.n_tweets ? static_cast<double>(cls.word_count) / static_cast<double>(cls.n_tweets) : 0.0;
  }
  return stats;
}

nlohmann::json to_json(const CorpusStats& stats) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [label, cls] : stats.per_class) {
    classes.push_back({{"label", label},
                       {"n_tweets", cls.n_tweets},
                       {"word_count", cls.word_count},
                       {"unique_words", cls.unique_words},
                       {"avg_words", cls.avg_words}});
  }
  nlohmann::json doc = {{"n_tweets", stats.n_tweets},
                        {"word_count", stats.word_count},
                        {"unique_words", stats.unique_words},
                        {"avg_words_per_tweet", stats.avg_words_per_tweet},
                        {"per_class", std::move(classes)}};
  if (!stats.per_class.empty()) {
    doc["minority_class"] = stats.per_class[stats.minority_class()].first;
    doc["majority_class"] = stats.per_class[stats.majority_class()].first;
  }
  return doc;
}

std::string to_markdown(const CorpusStats& stats, bool per_class) {
  struct Column {
    std::string name;
    std::size_t n, words, unique;
    double avg;
  };
  std::vector<Column> cols;
  if (per_class && !stats.per_class.empty()) {
    const auto& lo = stats.per_class[stats.minority_class()];
    const auto& hi = stats.per_class[stats.majority_class()];
    cols.push_back({"Minority class (" + lo.first + ")", lo.second.n_tweets, lo.second.word_count,
                    lo.second.unique_words, lo.second.avg_words});
    cols.push_back({"Majority class (" + hi.first + ")", hi.second.n_tweets, hi.second.word_count,
                    hi.second.unique_words, hi.second.avg_words});
    for (const auto& [label, cls] : stats.per_class)
      cols.push_back({label, cls.n_tweets, cls.word_count, cls.unique_words, cls.avg_words});
  }
  cols.push_back({"Total", stats.n_tweets, stats.word_count, stats.unique_words, stats.avg_words_per_tweet});

  std::ostringstream out;
  out << "| |";
  for (const auto& c : cols) out << ' ' << c.name << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---:|";
  out << "\n| Number of tweets |";
  for (const auto& c : cols) out << ' ' << c.n << " |";
  out << "\n| Word count |";
  for (const auto& c : cols) out << ' ' << c.words << " |";
  out << "\n| Unique words |";
  for (const auto& c : cols) out << ' ' << c.unique << " |";
  out << "\n| Average words per tweet |";
  for (const auto& c : cols) out << ' ' << fixed2(c.avg) << " |";
  out << '\n';
  return out.str();
}

}  // namespace tweetbench::corpus
