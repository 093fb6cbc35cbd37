#pragma once

// Topic-style synthetic tweets: every class owns a keyword list, tweets mix
// a few own keywords with shared filler and the odd off-topic keyword.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "tweetbench/common/rng.hpp"
#include "tweetbench/corpus.hpp"

namespace tbtest {

inline const std::vector<std::vector<std::string>>& topic_keywords() {
  static const std::vector<std::vector<std::string>> k{
      {"goal", "match", "striker", "keeper", "league", "derby", "penalty", "coach"},
      {"vote", "senate", "ballot", "policy", "minister", "campaign", "election", "parliament"},
      {"software", "laptop", "startup", "chip", "coding", "server", "cloud", "app"},
      {"vaccine", "doctor", "hospital", "clinic", "virus", "nurse", "therapy", "fitness"},
      {"album", "concert", "guitar", "singer", "playlist", "band", "lyrics", "tour"},
      {"storm", "rain", "forecast", "snow", "flood", "thunder", "humidity", "sunshine"}};
  return k;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> f{"today", "really", "people", "new",   "time",  "watch", "news",
                                          "big",   "week",   "love",   "crazy", "happy", "city",  "night",
                                          "world", "guys",   "wow",    "best",  "year",  "morning"};
  return f;
}

/// `per_class` tweets for each of `classes` (<= 6) topics.
inline tweetbench::corpus::Corpus topic_corpus(int classes, int per_class, std::uint64_t seed,
                                               double off_topic = 0.1) {
  tweetbench::Rng rng(seed);
  const auto& kw = topic_keywords();
  const auto& filler = filler_words();
  std::vector<tweetbench::corpus::LabeledTweet> tweets;
  int id = 0;
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < classes; ++c) {
      std::vector<std::string> words;
      const auto n_kw = 2 + rng.index(2);
      for (std::size_t j = 0; j < n_kw; ++j) {
        // Skewed toward the first keywords of the list.
        const auto a = rng.index(kw[c].size()), b = rng.index(kw[c].size());
        words.push_back(kw[c][std::min(a, b)]);
      }
      if (rng.bernoulli(off_topic)) {
        const auto other = (c + 1 + rng.index(classes - 1)) % classes;
        words.push_back(kw[other][rng.index(kw[other].size())]);
      }
      const auto n_fill = 3 + rng.index(4);
      for (std::size_t j = 0; j < n_fill; ++j) words.push_back(filler[rng.index(filler.size())]);
      rng.shuffle(std::span(words));
      std::string text;
      if (rng.bernoulli(0.2)) text = "@user" + std::to_string(rng.index(50)) + " ";
      for (const auto& w : words) text += w + " ";
      if (rng.bernoulli(0.2)) text += "https://t.co/x" + std::to_string(rng.index(1000));
      while (!text.empty() && text.back() == ' ') text.pop_back();
      tweets.push_back({"t" + std::to_string(++id), text, "topic" + std::to_string(c)});
    }
  }
  return tweetbench::corpus::Corpus(std::move(tweets));
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string to_csv(const tweetbench::corpus::Corpus& corpus) {
  std::string out = "id,text,label\n";
  for (const auto& t : corpus.tweets()) out += t.id + "," + csv_quote(t.text) + "," + t.label + "\n";
  return out;
}

}  // namespace tbtest
