#include <catch2/catch_amalgamated.hpp>

#include <topicflow/ingest.hpp>

#include "support.hpp"

#include <string>
#include <vector>

using namespace topicflow;

namespace {

const char* kGoodLine1 =
    R"({"id_str":"1001","text":"New autism study out today","created_at":"Sat Mar 21 12:00:00 +0000 2009",)"
    R"("urls":["http://example.com/study"],"hashtags":["autism"],"author_id":"u1"})";
const char* kGoodLine2 =
    R"({"id_str":"1002","text":"nothing to see","created_at":"2009-03-22T08:30:00Z",)"
    R"("urls":["http://example.com/a","https://example.com/b"],"hashtags":[],"author_id":"u2"})";

std::filesystem::path write_stream(const std::string& body) {
  const auto dir = testutil::fresh_dir("ingest");
  const auto path = dir / "tweets.jsonl";
  testutil::write_text(path, body);
  return path;
}

}  // namespace

TEST_CASE("parse_tweet_stream counts malformed lines without dying") {
  const auto path = write_stream(std::string(kGoodLine1) + "\n" +
                                 "{this is not json\n" + kGoodLine2 + "\n");
  const auto result = parse_tweet_stream(path.string());
  CHECK(result.report.lines_read == 3);
  CHECK(result.report.parsed == 2);
  CHECK(result.report.skipped == 1);
  CHECK(result.report.consistent());
  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].tweet_id == "1001");
  CHECK(result.records[0].text == "New autism study out today");
  CHECK(result.records[0].created_at == 1237636800);
  CHECK(result.records[0].urls ==
        std::vector<std::string>{"http://example.com/study"});
  CHECK(result.records[0].hashtags == std::vector<std::string>{"autism"});
  CHECK(result.records[0].author_id == "u1");
  CHECK(result.records[1].tweet_id == "1002");
  CHECK(result.records[1].urls.size() == 2);
}

TEST_CASE("parse_tweet_stream in strict mode throws on the first bad line") {
  const auto path =
      write_stream(std::string(kGoodLine1) + "\n" + "{broken\n");
  CHECK_THROWS_AS(parse_tweet_stream(path.string(), true), IngestError);
  CHECK_THROWS_AS(parse_tweet_stream("/no/such/file.jsonl"), IngestError);
}

TEST_CASE("duplicate tweet ids keep the first record") {
  std::string dup(kGoodLine1);
  const auto path = write_stream(dup + "\n" + dup + "\n");
  const auto result = parse_tweet_stream(path.string());
  CHECK(result.report.parsed == 1);
  CHECK(result.report.skipped == 1);
  REQUIRE(result.records.size() == 1);
}

TEST_CASE("records with invalid urls or timestamps are skipped") {
  const std::string bad_ts =
      R"({"id_str":"2001","text":"x","created_at":"not a date","urls":[],"hashtags":[],"author_id":"u"})";
  const std::string bad_url =
      R"({"id_str":"2002","text":"x","created_at":"2009-03-21T12:00:00Z","urls":["nota url"],"hashtags":[],"author_id":"u"})";
  const auto path = write_stream(bad_ts + "\n" + bad_url + "\n" +
                                 kGoodLine1 + "\n");
  const auto result = parse_tweet_stream(path.string());
  CHECK(result.report.parsed == 1);
  CHECK(result.report.skipped == 2);
}

TEST_CASE("tweet json round-trips through the parser") {
  TweetRecord r;
  r.tweet_id = "42";
  r.text = "hello \"quoted\" world";
  r.created_at = 1237636800;
  r.urls = {"http://example.com/x?a=1"};
  r.hashtags = {"tag"};
  r.author_id = "a9";
  const auto path = write_stream(to_json(r).dump() + "\n");
  const auto result = parse_tweet_stream(path.string(), true);
  REQUIRE(result.records.size() == 1);
  const auto& back = result.records[0];
  CHECK(back.tweet_id == r.tweet_id);
  CHECK(back.text == r.text);
  CHECK(back.created_at == r.created_at);
  CHECK(back.urls == r.urls);
  CHECK(back.hashtags == r.hashtags);
  CHECK(back.author_id == r.author_id);
}

TEST_CASE("keyword_filter does case-insensitive word-prefix matching") {
  const std::vector<std::string> stems{"autism", "adhd", "asperger", "aspie"};
  const auto tweet = [](const char* text) {
    TweetRecord r;
    r.text = text;
    return r;
  };
  CHECK(keyword_filter(tweet("new Autism study"), stems));
  CHECK(keyword_filter(tweet("my ADHD brain"), stems));
  CHECK(keyword_filter(tweet("aspergers and friends"), stems));  // prefix
  CHECK(keyword_filter(tweet("#aspie pride!"), stems));
  CHECK(keyword_filter(tweet("ASPIES unite"), stems));
  // stem must match at a word start, not mid-word
  CHECK_FALSE(keyword_filter(tweet("exaspie is not a word start"), stems));
  CHECK_FALSE(keyword_filter(tweet("autis truncated"), stems));
  CHECK_FALSE(keyword_filter(tweet(""), stems));
  CHECK_THROWS_AS(keyword_filter(tweet("x"), {}), IngestError);
}

TEST_CASE("url_stats aggregates per day and per tweet") {
  std::vector<TweetRecord> records(3);
  records[0].created_at = 1237636800;  // 2009-03-21
  records[0].urls = {"http://a/", "http://b/"};
  records[1].created_at = 1237636801;
  records[2].created_at = 1237636800 + 86400;  // next day
  records[2].urls = {"http://c/"};
  const auto s = url_stats(records);
  CHECK(s.url_count_histogram.at(0) == 1);
  CHECK(s.url_count_histogram.at(1) == 1);
  CHECK(s.url_count_histogram.at(2) == 1);
  CHECK(s.daily_tweets.at("2009-03-21") == 2);
  CHECK(s.daily_tweets.at("2009-03-22") == 1);
  CHECK(s.daily_urls.at("2009-03-21") == 2);
  CHECK(s.daily_urls.at("2009-03-22") == 1);
}
