#include <catch2/catch_amalgamated.hpp>

#include <topicflow/corpus.hpp>
#include <topicflow/rng.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

using namespace topicflow;

TEST_CASE("tokenize lowercases, strips stop words and short tokens") {
  TokenRules rules;
  CHECK(tokenize("The CAT sat on a MAT", rules) ==
        std::vector<std::string>{"cat", "sat", "mat"});
  CHECK(tokenize("abc123def x9y", rules) ==
        std::vector<std::string>{"abc", "def"});
  CHECK(tokenize("", rules).empty());
  CHECK(tokenize("  ...  ", rules).empty());

  rules.alpha_only = false;
  CHECK(tokenize("abc123def", rules) == std::vector<std::string>{"abc123def"});

  rules.alpha_only = true;
  rules.min_length = 4;
  CHECK(tokenize("one two three four", rules) ==
        std::vector<std::string>{"three", "four"});

  TokenRules keep_case;
  keep_case.lowercase = false;
  keep_case.stop_words.clear();
  CHECK(tokenize("The CAT", keep_case) ==
        std::vector<std::string>{"The", "CAT"});

  TokenRules extra;
  extra.stop_words.insert("cat");
  CHECK(tokenize("the cat sat", extra) == std::vector<std::string>{"sat"});
}

TEST_CASE("tokenize keeps non-ascii words intact") {
  TokenRules rules;
  rules.stop_words.clear();
  const auto toks = tokenize("caf\xC3\xA9 und stra\xC3\x9F""e", rules);
  REQUIRE(toks.size() == 3);
  CHECK(toks[0] == "caf\xC3\xA9");
  CHECK(toks[2] == "stra\xC3\x9F""e");
}

TEST_CASE("build_dictionary takes the shortest covering prefix") {
  const std::map<std::string, std::uint64_t> counts{
      {"a", 6}, {"b", 3}, {"c", 1}};
  const auto dict = build_dictionary(counts, 0.9);
  CHECK(dict.terms == std::vector<std::string>{"a", "b"});
  CHECK(dict.lookup("a") == std::uint32_t{0});
  CHECK(dict.lookup("b") == std::uint32_t{1});
  CHECK_FALSE(dict.lookup("c").has_value());
  CHECK_FALSE(dict.lookup("zzz").has_value());

  CHECK(build_dictionary(counts, 1.0).terms ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK(build_dictionary(counts, 0.1).terms ==
        std::vector<std::string>{"a"});
}

TEST_CASE("build_dictionary breaks count ties lexicographically") {
  const std::map<std::string, std::uint64_t> counts{
      {"zebra", 5}, {"apple", 5}, {"mango", 5}, {"kiwi", 2}};
  const auto dict = build_dictionary(counts, 1.0);
  CHECK(dict.terms ==
        std::vector<std::string>{"apple", "mango", "zebra", "kiwi"});
}

TEST_CASE("build_dictionary rejects degenerate input") {
  const std::map<std::string, std::uint64_t> counts{{"a", 1}};
  CHECK_THROWS_AS(build_dictionary(counts, 0.0), CorpusError);
  CHECK_THROWS_AS(build_dictionary(counts, 1.5), CorpusError);
  CHECK_THROWS_AS(
      build_dictionary(std::map<std::string, std::uint64_t>{}, 0.9),
      CorpusError);
}

TEST_CASE("dictionary prefix is covering and minimal on random tables") {
  Rng rng(555);
  for (int iter = 0; iter < 300; ++iter) {
    std::map<std::string, std::uint64_t> counts;
    const int n = 1 + static_cast<int>(rng.uniform01() * 30);
    for (int i = 0; i < n; ++i)
      counts["w" + std::to_string(i)] =
          1 + static_cast<std::uint64_t>(rng.uniform01() * 200);
    const double coverage = 0.05 + 0.95 * rng.uniform01();
    const auto dict = build_dictionary(counts, coverage);

    // independent re-derivation: sort by count desc then term asc, then walk
    std::vector<std::pair<std::string, std::uint64_t>> sorted(counts.begin(),
                                                              counts.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::uint64_t total = 0;
    for (const auto& [t, c] : counts) total += c;
    const double target = coverage * static_cast<double>(total);
    std::vector<std::string> expect;
    double cum = 0.0;
    for (const auto& [t, c] : sorted) {
      expect.push_back(t);
      cum += static_cast<double>(c);
      if (cum + kCoverageEpsilon >= target) break;
    }
    REQUIRE(dict.terms == expect);
  }
}

TEST_CASE("to_bow counts in-dictionary tokens and flags empty docs") {
  const std::map<std::string, std::uint64_t> counts{
      {"storm", 4}, {"rain", 2}, {"wind", 1}};
  const auto dict = build_dictionary(counts, 1.0);
  TokenRules rules;

  WebDocument doc;
  doc.doc_id = "http://example.com/w";
  doc.text = "Rain rain and wind; the storm of storms!";
  const auto bow = to_bow(doc, dict, rules);
  REQUIRE(bow.has_value());
  CHECK(bow->doc_id == doc.doc_id);
  CHECK(bow->total == 4);
  CHECK(bow->counts.at(*dict.lookup("rain")) == 2);
  CHECK(bow->counts.at(*dict.lookup("wind")) == 1);
  CHECK(bow->counts.at(*dict.lookup("storm")) == 1);  // "storms" is OOV

  WebDocument empty;
  empty.doc_id = "x";
  empty.text = "the of and";
  CHECK_FALSE(to_bow(empty, dict, rules).has_value());
  CHECK_THROWS_AS(to_bow(doc, Dictionary{}, rules), CorpusError);
}

namespace {

std::vector<WebDocument> docs_at(const std::vector<UtcSeconds>& stamps) {
  std::vector<WebDocument> docs;
  for (std::size_t i = 0; i < stamps.size(); ++i) {
    WebDocument d;
    d.doc_id = "doc" + std::to_string(i);
    d.linked_tweet_ids = {"t" + std::to_string(i)};
    d.timestamps = {stamps[i]};
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace

TEST_CASE("slice_epochs anchors at utc midnight and overlaps correctly") {
  const UtcSeconds day = kSecondsPerDay;
  const UtcSeconds t0 = 1237636800;  // 2009-03-21T12:00:00Z
  const auto docs = docs_at({t0, t0 + day, t0 + 2 * day, t0 + 3 * day});
  const auto slices = slice_epochs(docs, 3 * day, day);

  REQUIRE(slices.size() == 4);
  CHECK(slices[0].start == floor_utc_midnight(t0));
  for (std::size_t e = 0; e < slices.size(); ++e) {
    CHECK(slices[e].epoch_index == e);
    CHECK(slices[e].start == slices[0].start + static_cast<UtcSeconds>(e) * day);
    CHECK(slices[e].span == 3 * day);
  }
  // doc0 at noon of day 0 falls in epoch 0 only (epochs 1,2 start later)
  CHECK(slices[0].doc_ids == std::vector<std::string>{"doc0", "doc1", "doc2"});
  CHECK(slices[1].doc_ids == std::vector<std::string>{"doc1", "doc2", "doc3"});
  CHECK(slices[2].doc_ids == std::vector<std::string>{"doc2", "doc3"});
  CHECK(slices[3].doc_ids == std::vector<std::string>{"doc3"});
}

TEST_CASE("interior timestamps land in exactly span/step slices") {
  Rng rng(808);
  std::vector<UtcSeconds> stamps;
  const UtcSeconds t0 = 1237636800;
  for (int i = 0; i < 200; ++i)
    stamps.push_back(t0 + static_cast<UtcSeconds>(rng.uniform01() * 9.0 *
                                                  kSecondsPerDay));
  const auto docs = docs_at(stamps);
  const auto slices = slice_epochs(docs);  // 3d span, 1d step
  const UtcSeconds anchor = slices[0].start;
  for (std::size_t i = 0; i < stamps.size(); ++i) {
    std::size_t member = 0;
    for (const auto& s : slices)
      member += std::count(s.doc_ids.begin(), s.doc_ids.end(),
                           docs[i].doc_id);
    if (stamps[i] >= anchor + 2 * kSecondsPerDay) {
      CHECK(member == 3);
    } else {
      CHECK(member >= 1);
      CHECK(member <= 3);
    }
  }
}

TEST_CASE("multi-timestamp documents join every covering slice once") {
  WebDocument d;
  d.doc_id = "multi";
  d.linked_tweet_ids = {"t1", "t2"};
  const UtcSeconds t0 = 1237636800;
  d.timestamps = {t0, t0 + 5 * kSecondsPerDay};
  const auto slices = slice_epochs({d});
  for (const auto& s : slices)
    CHECK(std::count(s.doc_ids.begin(), s.doc_ids.end(), "multi") <= 1);
  std::size_t member = 0;
  for (const auto& s : slices) member += s.doc_ids.size();
  CHECK(member == 4);  // epoch 0 plus epochs 3,4,5
}

TEST_CASE("slice_epochs validates its inputs") {
  const auto docs = docs_at({1237636800});
  CHECK_THROWS_AS(slice_epochs(docs, 0, 1), CorpusError);
  CHECK_THROWS_AS(slice_epochs(docs, kSecondsPerDay, 2 * kSecondsPerDay),
                  CorpusError);
  CHECK_THROWS_AS(slice_epochs({}), CorpusError);
  WebDocument no_ts;
  no_ts.doc_id = "x";
  CHECK_THROWS_AS(slice_epochs({no_ts}), CorpusError);
}

TEST_CASE("propagate_topics averages linked docs and renormalizes") {
  const std::map<std::string, std::map<std::string, double>> doc_mix{
      {"d1", {{"k0", 0.75}, {"k1", 0.25}}},
      {"d2", {{"k1", 1.0}}},
  };
  const std::map<std::string, std::vector<std::string>> links{
      {"t1", {"d1"}},
      {"t2", {"d1", "d2"}},
      {"t3", {"missing"}},
  };
  std::size_t skipped = 0;
  const auto out = propagate_topics(doc_mix, links, &skipped);
  CHECK(skipped == 1);
  REQUIRE(out.size() == 2);
  CHECK(out.at("t1").at("k0") == Catch::Approx(0.75));
  CHECK(out.at("t2").at("k0") == Catch::Approx(0.375));
  CHECK(out.at("t2").at("k1") == Catch::Approx(0.625));
  double sum = 0.0;
  for (const auto& [k, w] : out.at("t2")) sum += w;
  CHECK(sum == Catch::Approx(1.0));
}

TEST_CASE("corpus structures round-trip through json") {
  const std::map<std::string, std::uint64_t> counts{{"a", 2}, {"b", 1}};
  const auto dict = build_dictionary(counts, 1.0);
  const auto dict_back = dictionary_from_json(to_json(dict));
  CHECK(dict_back.terms == dict.terms);
  CHECK(dict_back.coverage == dict.coverage);
  CHECK(dict_back.lookup("b") == dict.lookup("b"));

  BowDocument bow;
  bow.doc_id = "d";
  bow.counts = {{0, 3}, {7, 1}};
  bow.total = 4;
  const auto bow_back = bow_from_json(to_json(bow));
  CHECK(bow_back.doc_id == bow.doc_id);
  CHECK(bow_back.counts == bow.counts);
  CHECK(bow_back.total == bow.total);

  EpochSlice s;
  s.epoch_index = 2;
  s.start = 1237636800;
  s.span = 3 * kSecondsPerDay;
  s.doc_ids = {"x", "y"};
  const auto s_back = epoch_slice_from_json(to_json(s));
  CHECK(s_back.epoch_index == s.epoch_index);
  CHECK(s_back.start == s.start);
  CHECK(s_back.span == s.span);
  CHECK(s_back.doc_ids == s.doc_ids);

  WebDocument w;
  w.doc_id = "http://example.com/";
  w.text = "hello";
  w.linked_tweet_ids = {"t1"};
  w.timestamps = {1237636800};
  const auto w_back = web_document_from_json(to_json(w));
  CHECK(w_back.doc_id == w.doc_id);
  CHECK(w_back.text == w.text);
  CHECK(w_back.linked_tweet_ids == w.linked_tweet_ids);
  CHECK(w_back.timestamps == w.timestamps);
}
