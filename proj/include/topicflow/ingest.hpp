#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/time.hpp"
#include "topicflow/url.hpp"

namespace topicflow {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TweetRecord {
  std::string tweet_id;
  std::string text;
  UtcSeconds created_at = 0;
  std::vector<std::string> urls;      // absolute URLs, validated
  std::vector<std::string> hashtags;  // leading '#' stripped
  std::string author_id;
};

struct IngestReport {
  std::size_t lines_read = 0;
  std::size_t parsed = 0;
  std::size_t skipped = 0;  // malformed lines + duplicate ids

  bool consistent() const { return lines_read == parsed + skipped; }
};

namespace detail {

inline std::string json_string_or(const nlohmann::json& j,
                                  const char* key, std::string fallback = "") {
  if (auto it = j.find(key); it != j.end() && it->is_string())
    return it->get<std::string>();
  return fallback;
}

// Accepts the public tweet export shape (id_str, text, created_at,
// entities.urls[].expanded_url) and a flat synthetic shape (id, urls,
// hashtags, author_id). Throws IngestError describing the first problem.
inline TweetRecord tweet_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IngestError("record is not a JSON object");
  TweetRecord rec;

  rec.tweet_id = json_string_or(j, "id_str");
  if (rec.tweet_id.empty()) {
    if (auto it = j.find("id"); it != j.end()) {
      if (it->is_string())
        rec.tweet_id = it->get<std::string>();
      else if (it->is_number_integer())
        rec.tweet_id = std::to_string(it->get<std::int64_t>());
    }
  }
  if (rec.tweet_id.empty()) throw IngestError("missing tweet id");

  if (auto it = j.find("text"); it != j.end() && it->is_string())
    rec.text = it->get<std::string>();
  else if (auto ft = j.find("full_text"); ft != j.end() && ft->is_string())
    rec.text = ft->get<std::string>();
  else
    throw IngestError("missing text");

  const std::string ts = json_string_or(j, "created_at");
  if (ts.empty()) throw IngestError("missing created_at");
  const auto parsed_ts = parse_timestamp(ts);
  if (!parsed_ts) throw IngestError("unparseable created_at '" + ts + "'");
  rec.created_at = *parsed_ts;

  const auto add_url = [&rec](const std::string& u) {
    if (u.empty()) return;
    if (!is_absolute_url(u))
      throw IngestError("invalid URL '" + u + "'");
    rec.urls.push_back(u);
  };
  if (auto ent = j.find("entities"); ent != j.end() && ent->is_object()) {
    if (auto us = ent->find("urls"); us != ent->end() && us->is_array()) {
      for (const auto& u : *us) {
        if (!u.is_object()) continue;
        std::string e = json_string_or(u, "expanded_url");
        if (e.empty()) e = json_string_or(u, "url");
        add_url(e);
      }
    }
    if (auto hs = ent->find("hashtags"); hs != ent->end() && hs->is_array()) {
      for (const auto& h : *hs)
        if (h.is_object()) rec.hashtags.push_back(json_string_or(h, "text"));
    }
  } else if (auto us = j.find("urls"); us != j.end() && us->is_array()) {
    for (const auto& u : *us)
      if (u.is_string()) add_url(u.get<std::string>());
  }
  if (auto hs = j.find("hashtags"); hs != j.end() && hs->is_array()) {
    for (const auto& h : *hs)
      if (h.is_string()) rec.hashtags.push_back(h.get<std::string>());
  }
  for (auto& h : rec.hashtags)
    if (!h.empty() && h[0] == '#') h.erase(0, 1);

  rec.author_id = json_string_or(j, "author_id");
  if (rec.author_id.empty()) {
    if (auto u = j.find("user"); u != j.end() && u->is_object())
      rec.author_id = json_string_or(*u, "id_str");
  }
  return rec;
}

}  // namespace detail

struct IngestResult {
  std::vector<TweetRecord> records;
  IngestReport report;
};

/// Reads newline-delimited JSON tweet records, in order. Malformed lines are
/// skipped and counted unless strict is set, in which case the first one is
/// fatal. Duplicate tweet_ids keep the first occurrence; the rest count as
/// skipped.
inline IngestResult parse_tweet_stream(const std::string& path,
                                       bool strict = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open file: " + path);

  IngestResult out;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++out.report.lines_read;
    try {
      const auto j = nlohmann::json::parse(line);
      TweetRecord rec = detail::tweet_from_json(j);
      if (!seen_ids.insert(rec.tweet_id).second)
        throw IngestError("duplicate tweet_id '" + rec.tweet_id + "'");
      out.records.push_back(std::move(rec));
      ++out.report.parsed;
    } catch (const std::exception& e) {
      if (strict) {
        throw IngestError(path + ":" + std::to_string(line_no) + ": " +
                          e.what());
      }
      ++out.report.skipped;
    }
  }
  return out;
}

/// True iff any token of the lowercased text starts with one of the stems.
/// Tokens are maximal alphanumeric runs, so "#autism" and "autism." both
/// match the stem "autism", and so do suffixed derivatives ("autistic").
inline bool keyword_filter(const TweetRecord& record,
                           const std::vector<std::string>& stems) {
  if (stems.empty()) throw IngestError("keyword_filter: no stems given");
  const std::string& text = record.text;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           !std::isalnum(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t start = i;
    while (i < text.size() &&
           std::isalnum(static_cast<unsigned char>(text[i])))
      ++i;
    if (i == start) continue;
    for (const auto& stem : stems) {
      if (stem.empty() || i - start < stem.size()) continue;
      bool match = true;
      for (std::size_t k = 0; match && k < stem.size(); ++k) {
        match = std::tolower(static_cast<unsigned char>(text[start + k])) ==
                static_cast<unsigned char>(stem[k]);
      }
      if (match) return true;
    }
  }
  return false;
}

struct UrlStats {
  std::map<std::size_t, std::size_t> url_count_histogram;  // urls-per-tweet
  std::map<std::string, std::size_t> daily_tweets;         // "YYYY-MM-DD"
  std::map<std::string, std::size_t> daily_urls;
};

inline UrlStats url_stats(const std::vector<TweetRecord>& records) {
  UrlStats s;
  for (const auto& r : records) {
    ++s.url_count_histogram[r.urls.size()];
    const std::string day = utc_date_string(r.created_at);
    ++s.daily_tweets[day];
    s.daily_urls[day] += r.urls.size();
  }
  return s;
}

inline nlohmann::json to_json(const TweetRecord& r) {
  return nlohmann::json{{"id_str", r.tweet_id},
                        {"text", r.text},
                        {"created_at", format_utc(r.created_at)},
                        {"urls", r.urls},
                        {"hashtags", r.hashtags},
                        {"author_id", r.author_id}};
}

inline nlohmann::json to_json(const IngestReport& r) {
  return nlohmann::json{{"lines_read", r.lines_read},
                        {"parsed", r.parsed},
                        {"skipped", r.skipped}};
}

inline nlohmann::json to_json(const UrlStats& s) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : s.url_count_histogram)
    hist[std::to_string(k)] = v;
  return nlohmann::json{{"url_count_histogram", hist},
                        {"daily_tweets", s.daily_tweets},
                        {"daily_urls", s.daily_urls}};
}

}  // namespace topicflow
