#include <cctype>
#include <string>
#include <vector>

#include "doctest.h"
#include "tweetbench/common/error.hpp"
#include "tweetbench/common/rng.hpp"
#include "tweetbench/preprocess.hpp"

using namespace tweetbench;
using namespace tweetbench::preprocess;
using Tokens = std::vector<std::string>;

namespace {

PipelineConfig config_with_stopwords(WordSet stopwords) {
  PipelineConfig config;
  config.stopwords = std::make_shared<const WordSet>(std::move(stopwords));
  return config;
}

std::size_t non_tag_bytes(const TokenizedTweet& t) {
  std::size_t n = 0;
  for (const auto& tok : t.tokens)
    if (!is_tag_token(tok)) n += tok.size();
  return n;
}

std::vector<std::string> tricky_corpus() {
  std::vector<std::string> corpus = {
      "#ILoveComputerScience",
      "#GoGoGo gooooal!!!",
      "RT @bob check https://x.co/abc?q=1 now!!",
      "50% off at 5pm, call +1 555-123-4567 or mail me@example.com",
      "go go go go stop go",
      "I won $100 on 12/10/2020 :) :D <3",
      "sooooo happy 😀😀 yessss",
      "#catsanddogs are the best #NBA #Covid19",
      "Don't stop believin' ... it's 10:30 am",
      "",
      "   ",
      "the and of",
      "Café au lait — très bien!",
      "<hashtag> already tagged </hashtag> <url>",
      "#i #i #I",
      "wooooow wow wow",
      "#XMLFile_parser v2.0 released on Jan 5th, 2021",
  };
  // Random tweets over a fragment vocabulary that exercises every rule.
  const std::vector<std::string> fragments = {
      "#HelloWorld", "#sunnyday", "gooooal", "go", "go", "yesss", "the", "RT", "@user_1",
      "http://t.co/x", "www.site.org", "50%", "$20", "7pm", "3/4/2020", "1234", "3.14",
      ":)", ";-)", "😂", "Amazing", "AMAZING", "word", "WORD", "!!!", "(maybe)", "it's",
      "#2020vision", "sooo", "a", "I", "Ünïcode", "555 123 4567", "hi@x.io", "#go"};
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    std::string tweet;
    const auto n = 1 + rng.index(12);
    for (std::size_t k = 0; k < n; ++k) {
      if (!tweet.empty()) tweet += rng.bernoulli(0.1) ? "  " : " ";
      tweet += fragments[rng.index(fragments.size())];
    }
    corpus.push_back(tweet);
  }
  return corpus;
}

}  // namespace

TEST_CASE("unpack_hashtag") {
  const auto& lexicon = *default_lexicon();
  CHECK(unpack_hashtag("#ILoveComputerScience", lexicon) ==
        Tokens{"<hashtag>", "i", "love", "computer", "science", "</hashtag>"});
  CHECK(unpack_hashtag("#a", lexicon) == Tokens{"<hashtag>", "a", "</hashtag>"});

  const WordSet small{"cats", "and", "dogs"};
  CHECK(unpack_hashtag("#catsanddogs", small) ==
        Tokens{"<hashtag>", "cats", "and", "dogs", "</hashtag>"});

  SUBCASE("unsegmentable residue kept whole") {
    CHECK(unpack_hashtag("#qzxv", small) == Tokens{"<hashtag>", "qzxv", "</hashtag>"});
    CHECK(unpack_hashtag("#qzxcats", small) == Tokens{"<hashtag>", "qzx", "cats", "</hashtag>"});
  }
  SUBCASE("camel case with acronyms and digits") {
    CHECK(unpack_hashtag("#XMLFile", small) == Tokens{"<hashtag>", "xml", "file", "</hashtag>"});
    CHECK(unpack_hashtag("#Covid19", small) == Tokens{"<hashtag>", "covid", "19", "</hashtag>"});
  }
}

TEST_CASE("reduce_elongated") {
  const auto& lexicon = *default_lexicon();
  auto r = reduce_elongated("gooooal", lexicon);
  CHECK(r.token == "goal");
  CHECK(r.annotated);

  r = reduce_elongated("goal", lexicon);
  CHECK(r.token == "goal");
  CHECK_FALSE(r.annotated);

  r = reduce_elongated("yessss", lexicon);
  CHECK(r.token == "yes");
  CHECK(r.annotated);

  SUBCASE("two-letter form preferred when known") {
    r = reduce_elongated("goooood", lexicon);
    CHECK(r.token == "good");
  }
  SUBCASE("unknown word keeps the two-letter collapse") {
    r = reduce_elongated("zzzzqx", WordSet{});
    CHECK(r.token == "zzqx");
    CHECK(r.annotated);
  }
  SUBCASE("digits are not letters") {
    r = reduce_elongated("10000", lexicon);
    CHECK(r.token == "10000");
    CHECK_FALSE(r.annotated);
  }
}

TEST_CASE("reduce_repeated") {
  CHECK(reduce_repeated(Tokens{"go", "go", "go", "go"}) == Tokens{"<repeated>", "go"});
  CHECK(reduce_repeated(Tokens{"go", "stop", "go"}) == Tokens{"go", "stop", "go"});
  CHECK(reduce_repeated(Tokens{"a", "a", "b", "b", "b"}) ==
        Tokens{"<repeated>", "a", "<repeated>", "b"});
  CHECK(reduce_repeated(Tokens{}).empty());
  CHECK(reduce_repeated(Tokens{"Go", "go", "GO"}) == Tokens{"<repeated>", "Go"});
}

TEST_CASE("normalize_entities") {
  const Pipeline pipeline;
  CHECK(pipeline.normalize_entities("RT @bob check https://x.co") == "<user> check <url>");

  const Pipeline no_stop(config_with_stopwords({}));
  CHECK(no_stop.normalize_entities("plain words only") == "plain words only");
  CHECK(no_stop.normalize_entities("50% off at 5pm") == "<percent> off at <time>");

  SUBCASE("default stopwords drop off/at") {
    CHECK(pipeline.normalize_entities("50% off at 5pm") == "<percent> <time>");
  }
  SUBCASE("entity table") {
    CHECK(no_stop.normalize_entities("mail me@example.com") == "mail <email>");
    CHECK(no_stop.normalize_entities("won $100") == "won <money>");
    CHECK(no_stop.normalize_entities("paid 20 dollars") == "paid <money>");
    CHECK(no_stop.normalize_entities("on 12/10/2020") == "on <date>");
    CHECK(no_stop.normalize_entities("on Jan 5th, 2021") == "on <date>");
    CHECK(no_stop.normalize_entities("at 10:30 am") == "at <time>");
    CHECK(no_stop.normalize_entities("call 555-123-4567") == "call <phone>");
    CHECK(no_stop.normalize_entities("call +1 555 123 4567") == "call <phone>");
    CHECK(no_stop.normalize_entities("top 10 list") == "top <number> list");
    CHECK(no_stop.normalize_entities("pi 3.14") == "pi <number>");
    CHECK(no_stop.normalize_entities("www.site.org rocks") == "<url> rocks");
  }
  SUBCASE("numbers inside words are not entities") {
    CHECK(no_stop.normalize_entities("covid19 3rd") == "covid19 3rd");
  }
  SUBCASE("emoticons and emoji are removed") {
    CHECK(no_stop.normalize_entities("great :) day") == "great day");
    CHECK(no_stop.normalize_entities("great :-D") == "great");
    CHECK(no_stop.normalize_entities("love <3 it") == "love it");
    CHECK(no_stop.normalize_entities("fun😀times") == "fun times");
  }
  SUBCASE("RT only as a standalone word") {
    CHECK(no_stop.normalize_entities("rt this art") == "this art");
  }
}

TEST_CASE("preprocess end to end") {
  const Pipeline pipeline;

  SUBCASE("empty input is flagged") {
    const auto t = pipeline.run("");
    CHECK(t.empty());
    CHECK(t.tokens.empty());
  }

  SUBCASE("composed rules") {
    const auto t = pipeline.run("#GoGoGo gooooal!!!");
    CHECK(t.tokens == Tokens{"<hashtag>", "<repeated>", "go", "</hashtag>", "goal"});
    const std::vector<Annotation> expected{
        {Tag::kHashtag, 0, 4}, {Tag::kRepeated, 1, 3}, {Tag::kElongated, 4, 5}};
    CHECK(t.annotations == expected);
  }

  SUBCASE("hashtag example in full pipeline") {
    const auto t = pipeline.run("#ILoveComputerScience");
    CHECK(t.tokens == Tokens{"<hashtag>", "i", "love", "computer", "science", "</hashtag>"});
    CHECK(t.annotations == std::vector<Annotation>{{Tag::kHashtag, 0, 6}});
  }

  SUBCASE("elongated and repeated examples in full pipeline") {
    CHECK(pipeline.run("gooooal").tokens == Tokens{"goal"});
    CHECK(pipeline.run("go go go go").tokens == Tokens{"<repeated>", "go"});
  }

  SUBCASE("all tokens removed") {
    const auto t = pipeline.run("the of and :)");
    CHECK(t.empty());
    CHECK(t.accounting.discarded == 10);
  }

  SUBCASE("lowercasing happens last") {
    const auto t = pipeline.run("Big BIG");
    CHECK(t.tokens == Tokens{"<repeated>", "big"});
  }

  SUBCASE("rule order and subsets are honoured") {
    PipelineConfig config;
    config.enabled_rules = {Rule::kLowercase};
    const Pipeline bare(config);
    CHECK(bare.run("#GoGo Gooooal the").tokens == Tokens{"gogo", "gooooal", "the"});
  }
}

TEST_CASE("pipeline config") {
  SUBCASE("text rule must come first") {
    PipelineConfig config;
    config.enabled_rules = {Rule::kLowercase, Rule::kNormalizeEntities};
    CHECK_THROWS_AS(Pipeline{config}, ConfigError);
  }
  SUBCASE("duplicate rule") {
    PipelineConfig config;
    config.enabled_rules = {Rule::kLowercase, Rule::kLowercase};
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("json round trip of rule list") {
    const auto doc = nlohmann::json{{"rules", {"normalize_entities", "lowercase"}}, {"stopwords", "none"}};
    const auto config = PipelineConfig::from_json(doc);
    CHECK(config.enabled_rules == std::vector<Rule>{Rule::kNormalizeEntities, Rule::kLowercase});
    CHECK(config.stopwords->empty());
    CHECK(config.hash() != PipelineConfig{}.hash());
  }
  SUBCASE("unknown rule") {
    CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json{{"rules", {"stem"}}}), ConfigError);
  }
  SUBCASE("bad emoticon regex") {
    PipelineConfig config;
    config.extra_emoticons = {"(("};
    CHECK_THROWS_AS(Pipeline{config}, ConfigError);
  }
}

TEST_CASE("pipeline invariants over a test corpus") {
  const Pipeline pipeline;
  for (const auto& text : tricky_corpus()) {
    CAPTURE(text);
    const auto first = pipeline.run(text);

    // Idempotence.
    const auto second = pipeline.run(first.render());
    CHECK(second.tokens == first.tokens);

    // Determinism.
    CHECK(pipeline.run(text).tokens == first.tokens);

    for (const auto& tok : first.tokens) {
      CHECK_FALSE(tok.empty());
      if (is_tag_token(tok)) continue;
      for (char c : tok) CHECK_FALSE((c >= 'A' && c <= 'Z'));
    }

    for (const auto& a : first.annotations) {
      CHECK(a.begin < a.end);
      CHECK(a.end <= first.tokens.size());
    }

    // No-loss accounting.
    CHECK(first.accounting.total() == text.size());
    CHECK(first.accounting.emitted == non_tag_bytes(first));
  }
}
