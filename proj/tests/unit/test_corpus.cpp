#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "support/toys.hpp"
#include "tweetbench/common/error.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/corpus.hpp"

using namespace tweetbench;
using namespace tweetbench::corpus;

namespace {

preprocess::Pipeline plain_pipeline() {
  preprocess::PipelineConfig config;
  config.stopwords = std::make_shared<const preprocess::WordSet>();
  return preprocess::Pipeline(config);
}

using tbtest::make_corpus;
using tbtest::random_corpus;

}  // namespace

TEST_CASE("parse_corpus formats") {
  SUBCASE("csv with quotes") {
    const auto c = parse_corpus("id,text,label\n\"t1\",\"hello\",\"Sports\"\n\"t2\",\"vote now\",\"Politics\"\n",
                                Format::kCsv);
    REQUIRE(c.size() == 2);
    CHECK(c.labels() == std::vector<std::string>{"Sports", "Politics"});
    CHECK(c.tweets()[1].text == "vote now");
    CHECK(c.label_ids() == std::vector<int>{0, 1});
  }
  SUBCASE("csv quoting with commas, doubled quotes and newlines") {
    const auto c = parse_corpus("text,label,id\n\"a, \"\"b\"\"\nc\",X,7\nplain,Y,8\n", Format::kCsv);
    REQUIRE(c.size() == 2);
    CHECK(c.tweets()[0].text == "a, \"b\"\nc");
    CHECK(c.tweets()[0].id == "7");
    CHECK(c.tweets()[1].label == "Y");
  }
  SUBCASE("tsv without id column") {
    const auto c = parse_corpus("text\tlabel\nhello\tA\nworld\tB\n", Format::kTsv);
    CHECK(c.tweets()[0].id == "1");
    CHECK(c.tweets()[1].id == "2");
  }
  SUBCASE("jsonl") {
    const auto c = parse_corpus("{\"id\": 1, \"text\": \"x\", \"label\": \"A\"}\n\n{\"text\": \"y\", \"label\": \"B\"}\n",
                                Format::kJsonl);
    REQUIRE(c.size() == 2);
    CHECK(c.tweets()[0].id == "1");
  }
  SUBCASE("labels in first-appearance order") {
    const auto c = parse_corpus("text,label\na,Z\nb,A\nc,Z\nd,M\n", Format::kCsv);
    CHECK(c.labels() == std::vector<std::string>{"Z", "A", "M"});
  }
}

TEST_CASE("parse_corpus errors") {
  CHECK_THROWS_WITH_AS(parse_corpus("", Format::kCsv), doctest::Contains("no records"), DataError);
  CHECK_THROWS_WITH_AS(parse_corpus("id,text,label\n", Format::kCsv), doctest::Contains("no records"), DataError);
  CHECK_THROWS_WITH_AS(parse_corpus("", Format::kJsonl), doctest::Contains("no records"), DataError);
  CHECK_THROWS_WITH_AS(parse_corpus("id,text,label\nt1,hello,A\nt2,,B\n", Format::kCsv),
                       doctest::Contains("line 3"), DataError);
  CHECK_THROWS_WITH_AS(parse_corpus("id,text,label\nt1,hello,\n", Format::kCsv),
                       doctest::Contains("line 2"), DataError);
  CHECK_THROWS_WITH_AS(parse_corpus("id,text,label\nt1,a,A\nt1,b,A\n", Format::kCsv),
                       doctest::Contains("duplicate"), DataError);
  CHECK_THROWS_WITH_AS(parse_corpus("{\"text\": \"x\"}\n", Format::kJsonl), doctest::Contains("line 1"), DataError);
  CHECK_THROWS_AS(parse_corpus("foo,bar\n1,2\n", Format::kCsv), DataError);
  CHECK_THROWS_AS(load_corpus("/nonexistent/file.csv"), DataError);
  CHECK_FALSE(format_from_name("xml").has_value());
}

TEST_CASE("load determinism") {
  const auto path = std::filesystem::temp_directory_path() / "tb_corpus_test.csv";
  {
    std::ofstream out(path);
    out << "id,text,label\nt1,Hello world,A\nt2,#GoGo team,B\n";
  }
  const auto a = load_corpus(path);
  const auto b = load_corpus(path);
  CHECK(a.content_hash() == b.content_hash());
  const preprocess::Pipeline pipeline;
  CHECK(to_json(compute_stats(a, pipeline)) == to_json(compute_stats(b, pipeline)));
  std::filesystem::remove(path);
}

TEST_CASE("compute_stats") {
  const auto pipeline = plain_pipeline();
  SUBCASE("hand-counted example") {
    const auto c = make_corpus({{"a b a", "X"}, {"b c", "Y"}});
    const auto s = compute_stats(c, pipeline);
    CHECK(s.n_tweets == 2);
    CHECK(s.word_count == 5);
    CHECK(s.unique_words == 3);
    CHECK(s.avg_words_per_tweet == doctest::Approx(2.5));
    CHECK(s.per_class[0].second.word_count == 3);
    CHECK(s.per_class[0].second.unique_words == 2);
    CHECK(s.per_class[1].second.avg_words == doctest::Approx(2.0));
  }
  SUBCASE("single tweet") {
    const auto s = compute_stats(make_corpus({{"x", "X"}}), pipeline);
    CHECK(s.n_tweets == 1);
    CHECK(s.word_count == 1);
    CHECK(s.unique_words == 1);
    CHECK(s.avg_words_per_tweet == doctest::Approx(1.0));
  }
  SUBCASE("tags are not words and per-class counts sum to totals") {
    const auto c = make_corpus({{"#GoTeam http://x.co now", "A"}, {"go go go", "B"}, {"win", "A"}});
    const auto s = compute_stats(c, pipeline);
    std::size_t n = 0, words = 0;
    for (const auto& [label, cls] : s.per_class) {
      n += cls.n_tweets;
      words += cls.word_count;
    }
    CHECK(n == s.n_tweets);
    CHECK(words == s.word_count);
    CHECK(s.word_count == 5);  // go team now | go | win
    CHECK(s.per_class[s.majority_class()].first == "A");
    CHECK(s.per_class[s.minority_class()].first == "B");
  }
  SUBCASE("markdown layout") {
    const auto s = compute_stats(make_corpus({{"a b", "X"}, {"c", "Y"}, {"d e f", "X"}}), pipeline);
    const auto md = to_markdown(s, true);
    CHECK(md.find("| Number of tweets |") != std::string::npos);
    CHECK(md.find("Minority class (Y)") != std::string::npos);
    CHECK(md.find("Majority class (X)") != std::string::npos);
    CHECK(md.find("| Average words per tweet | 1.00 | 2.50 | 2.50 | 1.00 | 2.00 |") != std::string::npos);
    CHECK(to_markdown(s).find("Minority") == std::string::npos);
  }
}

TEST_CASE("stratified_folds examples") {
  SUBCASE("two balanced classes") {
    std::vector<std::pair<std::string, std::string>> rows;
    for (int i = 0; i < 5; ++i) rows.emplace_back("a" + std::to_string(i), "A");
    for (int i = 0; i < 5; ++i) rows.emplace_back("b" + std::to_string(i), "B");
    const auto c = make_corpus(rows);
    const auto f = stratified_folds(c, 5, 1);
    for (int fold = 0; fold < 5; ++fold) {
      const auto idx = f.validation_indices(fold);
      REQUIRE(idx.size() == 2);
      CHECK(c.label_ids()[idx[0]] != c.label_ids()[idx[1]]);
    }
  }
  SUBCASE("seven tweets of one class") {
    std::vector<std::pair<std::string, std::string>> rows(7, {"x", "A"});
    auto sizes = stratified_folds(make_corpus(rows), 5, 3).sizes();
    std::sort(sizes.rbegin(), sizes.rend());
    CHECK(sizes == std::vector<std::size_t>{2, 2, 1, 1, 1});
  }
  SUBCASE("determinism and seed sensitivity") {
    Rng rng(5);
    const auto c = random_corpus(rng, 5);
    const auto a = stratified_folds(c, 5, 42);
    const auto b = stratified_folds(c, 5, 42);
    CHECK(a.fold_of == b.fold_of);
    CHECK(a.hash() == b.hash());
    CHECK(stratified_folds(c, 5, 43).hash() != a.hash());
  }
  SUBCASE("errors") {
    const auto c = make_corpus({{"a", "A"}, {"b", "A"}, {"c", "B"}});
    CHECK_THROWS_WITH_AS(stratified_folds(c, 2, 0), doctest::Contains("'B'"), DataError);
    CHECK_THROWS_AS(stratified_folds(c, 1, 0), ConfigError);
  }
  SUBCASE("id lookup") {
    const auto c = make_corpus({{"a", "A"}, {"b", "A"}});
    const auto f = stratified_folds(c, 2, 0);
    CHECK(f.fold("t0") != f.fold("t1"));
    CHECK_THROWS_AS(f.fold("nope"), DataError);
  }
}

TEST_CASE("stratified_folds properties over random corpora") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.index(6));
    const auto c = random_corpus(rng, k);
    const auto f = stratified_folds(c, k, rng.next_u64());
    CHECK(f.fold_of.size() == c.size());
    const auto sizes = f.sizes();
    std::size_t total = 0;
    for (auto s : sizes) total += s;
    CHECK(total == c.size());
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    std::map<std::pair<int, int>, int> per;
    for (std::size_t i = 0; i < c.size(); ++i) ++per[{c.label_ids()[i], f.fold_of[i]}];
    for (std::size_t cls = 0; cls < c.num_classes(); ++cls) {
      int lo = 1 << 30, hi = 0;
      for (int fold = 0; fold < k; ++fold) {
        const int n = per[{static_cast<int>(cls), fold}];
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      CHECK(hi - lo <= 1);
    }
  }
}
