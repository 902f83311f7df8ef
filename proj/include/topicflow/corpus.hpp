#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/stopwords.hpp"
#include "topicflow/time.hpp"

namespace topicflow {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One web page's extracted text plus the tweets that linked to it.
struct WebDocument {
  std::string doc_id;  // derived from the canonical final URL
  std::string text;
  std::vector<std::string> linked_tweet_ids;  // duplicate-free
  std::vector<UtcSeconds> timestamps;         // one per linking tweet
};

struct TokenRules {
  bool lowercase = true;
  std::size_t min_length = 2;
  bool alpha_only = true;
  std::unordered_set<std::string> stop_words = default_english_stopwords();
};

/// Splits text into lowercase alphabetic tokens, filtering stop words and
/// tokens shorter than min_length. Non-ASCII bytes are treated as letters so
/// accented words survive untouched.
inline std::vector<std::string> tokenize(std::string_view text,
                                         const TokenRules& rules) {
  std::vector<std::string> out;
  std::string tok;
  const auto flush = [&] {
    if (tok.size() >= rules.min_length && !rules.stop_words.count(tok))
      out.push_back(tok);
    tok.clear();
  };
  for (const char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    const bool letter = std::isalpha(c) || c >= 0x80;
    const bool digit = std::isdigit(c);
    if (letter || (digit && !rules.alpha_only)) {
      tok += rules.lowercase && c < 0x80
                 ? static_cast<char>(std::tolower(c))
                 : ch;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

/// Frequency-ordered term list covering at least `coverage` of the corpus
/// token mass. Ties in frequency break lexicographically.
struct Dictionary {
  std::vector<std::string> terms;  // descending corpus frequency
  std::unordered_map<std::string, std::uint32_t> index;
  double coverage = 0.0;

  std::size_t size() const { return terms.size(); }

  std::optional<std::uint32_t> lookup(const std::string& term) const {
    const auto it = index.find(term);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

// Guard against the binary rounding of coverage * total at exact boundaries
// (0.9 * 10 evaluates slightly above 9).
inline constexpr double kCoverageEpsilon = 1e-6;

/// Shortest descending-frequency prefix whose cumulative count reaches
/// coverage * total.
template <typename CountMap>
inline Dictionary build_dictionary(const CountMap& token_counts,
                                   double coverage = 0.9) {
  if (token_counts.empty())
    throw CorpusError("build_dictionary: empty token counts");
  if (!(coverage > 0.0) || coverage > 1.0)
    throw CorpusError("build_dictionary: coverage must be in (0, 1]");

  std::vector<std::pair<std::string, std::uint64_t>> entries(
      token_counts.begin(), token_counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::uint64_t total = 0;
  for (const auto& [term, count] : entries) total += count;
  const double target = coverage * static_cast<double>(total);

  Dictionary dict;
  dict.coverage = coverage;
  std::uint64_t cumulative = 0;
  for (const auto& [term, count] : entries) {
    cumulative += count;
    dict.index.emplace(term, static_cast<std::uint32_t>(dict.terms.size()));
    dict.terms.push_back(term);
    if (static_cast<double>(cumulative) + kCoverageEpsilon >= target) break;
  }
  return dict;
}

/// Sparse bag-of-words representation of a document over a dictionary.
struct BowDocument {
  std::string doc_id;
  std::map<std::uint32_t, std::uint32_t> counts;  // term index -> count >= 1
  std::uint64_t total = 0;                        // N_j
};

/// nullopt flags a document with zero in-dictionary tokens; callers exclude
/// it from modeling and count it.
inline std::optional<BowDocument> to_bow(const WebDocument& doc,
                                         const Dictionary& dict,
                                         const TokenRules& rules) {
  if (dict.terms.empty()) throw CorpusError("to_bow: empty dictionary");
  BowDocument bow;
  bow.doc_id = doc.doc_id;
  for (const auto& tok : tokenize(doc.text, rules)) {
    if (const auto idx = dict.lookup(tok)) {
      ++bow.counts[*idx];
      ++bow.total;
    }
  }
  if (bow.total == 0) return std::nullopt;
  return bow;
}

struct EpochSlice {
  std::size_t epoch_index = 0;
  UtcSeconds start = 0;
  UtcSeconds span = 0;  // interval is [start, start + span)
  std::vector<std::string> doc_ids;

  bool contains(UtcSeconds t) const { return t >= start && t < start + span; }
};

/// Overlapping time slices: epoch 0 starts at UTC midnight of the earliest
/// timestamp, successive epochs advance by `step`, and a document enters
/// every slice whose interval contains any of its timestamps.
inline std::vector<EpochSlice> slice_epochs(
    const std::vector<WebDocument>& docs,
    UtcSeconds span = 3 * kSecondsPerDay, UtcSeconds step = kSecondsPerDay) {
  if (span <= 0 || step <= 0 || step > span)
    throw CorpusError("slice_epochs: need 0 < step <= span");
  if (docs.empty()) throw CorpusError("slice_epochs: no documents");

  bool any_ts = false;
  UtcSeconds min_ts = 0, max_ts = 0;
  for (const auto& d : docs) {
    for (const auto t : d.timestamps) {
      if (!any_ts || t < min_ts) min_ts = t;
      if (!any_ts || t > max_ts) max_ts = t;
      any_ts = true;
    }
  }
  if (!any_ts) throw CorpusError("slice_epochs: documents carry no timestamps");

  const UtcSeconds anchor = floor_utc_midnight(min_ts);
  const std::size_t last_epoch =
      static_cast<std::size_t>((max_ts - anchor) / step);

  std::vector<EpochSlice> slices(last_epoch + 1);
  for (std::size_t e = 0; e <= last_epoch; ++e) {
    slices[e].epoch_index = e;
    slices[e].start = anchor + static_cast<UtcSeconds>(e) * step;
    slices[e].span = span;
  }
  for (const auto& d : docs) {
    for (std::size_t e = 0; e <= last_epoch; ++e) {
      const bool member = std::any_of(
          d.timestamps.begin(), d.timestamps.end(),
          [&slices, e](UtcSeconds t) { return slices[e].contains(t); });
      if (member) slices[e].doc_ids.push_back(d.doc_id);
    }
  }
  return slices;
}

/// Tweet-level topic mixtures: the uniform average of the linked documents'
/// mixtures. Tweets with no modeled documents are absent from the output and
/// counted in `skipped`.
inline std::map<std::string, std::map<std::string, double>> propagate_topics(
    const std::map<std::string, std::map<std::string, double>>& doc_mixtures,
    const std::map<std::string, std::vector<std::string>>& tweet_links,
    std::size_t* skipped = nullptr) {
  if (skipped) *skipped = 0;
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [tweet_id, doc_ids] : tweet_links) {
    std::map<std::string, double> mix;
    std::size_t used = 0;
    for (const auto& doc_id : doc_ids) {
      const auto it = doc_mixtures.find(doc_id);
      if (it == doc_mixtures.end()) continue;
      ++used;
      for (const auto& [topic, w] : it->second) mix[topic] += w;
    }
    if (used == 0) {
      if (skipped) ++*skipped;
      continue;
    }
    double total = 0.0;
    for (const auto& [topic, w] : mix) total += w;
    if (total <= 0.0) {
      if (skipped) ++*skipped;
      continue;
    }
    for (auto& [topic, w] : mix) w /= total;
    out.emplace(tweet_id, std::move(mix));
  }
  return out;
}

// ---- persistence --------------------------------------------------------

inline nlohmann::json to_json(const Dictionary& dict) {
  return nlohmann::json{{"terms", dict.terms}, {"coverage", dict.coverage}};
}

inline Dictionary dictionary_from_json(const nlohmann::json& j) {
  Dictionary dict;
  dict.coverage = j.at("coverage").get<double>();
  dict.terms = j.at("terms").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < dict.terms.size(); ++i)
    dict.index.emplace(dict.terms[i], static_cast<std::uint32_t>(i));
  if (dict.index.size() != dict.terms.size())
    throw CorpusError("dictionary contains duplicate terms");
  return dict;
}

inline nlohmann::json to_json(const WebDocument& doc) {
  nlohmann::json ts = nlohmann::json::array();
  for (const auto t : doc.timestamps) ts.push_back(format_utc(t));
  return nlohmann::json{{"doc_id", doc.doc_id},
                        {"text", doc.text},
                        {"linked_tweet_ids", doc.linked_tweet_ids},
                        {"timestamps", ts}};
}

inline WebDocument web_document_from_json(const nlohmann::json& j) {
  WebDocument doc;
  doc.doc_id = j.at("doc_id").get<std::string>();
  if (auto it = j.find("text"); it != j.end())
    doc.text = it->get<std::string>();
  doc.linked_tweet_ids =
      j.at("linked_tweet_ids").get<std::vector<std::string>>();
  for (const auto& t : j.at("timestamps")) {
    const auto parsed = parse_timestamp(t.get<std::string>());
    if (!parsed) throw CorpusError("bad timestamp in document " + doc.doc_id);
    doc.timestamps.push_back(*parsed);
  }
  if (doc.linked_tweet_ids.empty())
    throw CorpusError("document " + doc.doc_id + " has no linked tweets");
  if (doc.linked_tweet_ids.size() != doc.timestamps.size())
    throw CorpusError("document " + doc.doc_id +
                      " timestamps do not align with linked tweets");
  return doc;
}

inline nlohmann::json to_json(const BowDocument& bow) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [idx, c] : bow.counts) counts[std::to_string(idx)] = c;
  return nlohmann::json{
      {"doc_id", bow.doc_id}, {"counts", counts}, {"total", bow.total}};
}

inline BowDocument bow_from_json(const nlohmann::json& j) {
  BowDocument bow;
  bow.doc_id = j.at("doc_id").get<std::string>();
  for (const auto& [key, value] : j.at("counts").items()) {
    const auto idx = static_cast<std::uint32_t>(std::stoul(key));
    bow.counts[idx] = value.get<std::uint32_t>();
    bow.total += value.get<std::uint32_t>();
  }
  const auto declared = j.at("total").get<std::uint64_t>();
  if (declared != bow.total)
    throw CorpusError("document " + bow.doc_id + " total mismatch");
  return bow;
}

inline nlohmann::json to_json(const EpochSlice& s) {
  return nlohmann::json{{"epoch_index", s.epoch_index},
                        {"start", format_utc(s.start)},
                        {"span_seconds", s.span},
                        {"doc_ids", s.doc_ids}};
}

inline EpochSlice epoch_slice_from_json(const nlohmann::json& j) {
  EpochSlice s;
  s.epoch_index = j.at("epoch_index").get<std::size_t>();
  const auto parsed = parse_timestamp(j.at("start").get<std::string>());
  if (!parsed) throw CorpusError("bad epoch start timestamp");
  s.start = *parsed;
  s.span = j.at("span_seconds").get<UtcSeconds>();
  s.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  return s;
}

}  // namespace topicflow
