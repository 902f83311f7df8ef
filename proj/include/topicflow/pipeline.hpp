#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicflow/checkpoint.hpp"
#include "topicflow/corpus.hpp"
#include "topicflow/digest.hpp"
#include "topicflow/evolve.hpp"
#include "topicflow/extract.hpp"
#include "topicflow/fetch.hpp"
#include "topicflow/hdp.hpp"
#include "topicflow/ingest.hpp"
#include "topicflow/synth.hpp"
#include "topicflow/url.hpp"

namespace topicflow {

// exit code 1
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// exit code 2
class MissingPrereqError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// exit code 3
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every free parameter of the pipeline, loadable from one JSON file.
struct PipelineConfig {
  // paths
  std::string input;  // raw tweet JSONL
  std::string work_dir = "work";
  std::string cache_dir = "cache";
  std::string synth_plan;  // plan JSON for the synth stage

  // ingest
  std::vector<std::string> stems = {"autism", "adhd", "asperger", "aspie"};
  bool strict = false;

  // fetch
  FetchPolicy fetch;

  // extract
  TagPolicy tags = TagPolicy::defaults();

  // corpus
  std::size_t min_token_length = 2;
  bool lowercase_tokens = true;
  bool alpha_only_tokens = true;
  std::vector<std::string> extra_stop_words;
  double coverage = 0.9;
  int epoch_span_days = 3;
  int epoch_step_days = 1;

  // train
  HdpHyperparams hyper;
  std::uint32_t sweeps = 500;
  std::uint32_t burn_in = 300;
  std::uint64_t min_mass = 10;
  std::uint64_t seed = 1;

  // track
  double tau_prune = 0.5;
  std::string similarity = "weighted_jaccard";  // or "topk_jaccard"
  std::size_t top_k = 50;

  // execution
  int jobs = 1;

  TokenRules token_rules() const {
    TokenRules rules;
    rules.lowercase = lowercase_tokens;
    rules.min_length = min_token_length;
    rules.alpha_only = alpha_only_tokens;
    for (const auto& w : extra_stop_words) rules.stop_words.insert(w);
    return rules;
  }

  SimilaritySpec similarity_spec() const {
    SimilaritySpec spec;
    spec.kind = similarity == "topk_jaccard" ? SimilarityKind::topk_jaccard
                                             : SimilarityKind::weighted_jaccard;
    spec.top_k = top_k;
    return spec;
  }

  /// Throws one ConfigError listing every violation.
  void validate() const {
    std::vector<std::string> bad;
    if (stems.empty()) bad.push_back("ingest.stems must not be empty");
    try {
      fetch.validate();
    } catch (const FetchError& e) {
      bad.push_back(e.what());
    }
    try {
      tags.validate();
    } catch (const ExtractError& e) {
      bad.push_back(e.what());
    }
    if (!(coverage > 0.0) || coverage > 1.0)
      bad.push_back("corpus.coverage must lie in (0, 1]");
    if (epoch_span_days < 1 || epoch_step_days < 1 ||
        epoch_step_days > epoch_span_days)
      bad.push_back("epochs need 1 <= step_days <= span_days");
    try {
      hyper.validate();
    } catch (const HdpError& e) {
      bad.push_back(e.what());
    }
    if (sweeps == 0 || burn_in >= sweeps)
      bad.push_back("train needs sweeps > burn_in >= 0");
    if (!(tau_prune >= 0.0 && tau_prune <= 1.0))
      bad.push_back("track.tau_prune must lie in [0, 1]");
    if (similarity != "weighted_jaccard" && similarity != "topk_jaccard")
      bad.push_back("track.similarity must be weighted_jaccard or topk_jaccard");
    if (similarity == "topk_jaccard" && top_k == 0)
      bad.push_back("track.top_k must be positive");
    if (jobs < 1) bad.push_back("jobs must be positive");
    if (work_dir.empty()) bad.push_back("work_dir must not be empty");
    if (cache_dir.empty()) bad.push_back("cache_dir must not be empty");
    if (!bad.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& b : bad) msg += "\n  - " + b;
      throw ConfigError(msg);
    }
  }
};

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {{"input", c.input},
          {"work_dir", c.work_dir},
          {"cache_dir", c.cache_dir},
          {"synth_plan", c.synth_plan},
          {"ingest", {{"stems", c.stems}, {"strict", c.strict}}},
          {"fetch",
           {{"allowed_types",
             std::vector<std::string>(c.fetch.allowed_types.begin(),
                                      c.fetch.allowed_types.end())},
            {"max_redirects", c.fetch.max_redirects},
            {"max_body_bytes", c.fetch.max_body_bytes},
            {"timeout_ms", c.fetch.timeout_ms},
            {"offline", c.fetch.offline},
            {"verify_tls", c.fetch.verify_tls},
            {"parallelism", c.fetch.parallelism},
            {"per_host_spacing_ms", c.fetch.per_host_spacing_ms}}},
          {"tag_policy", to_json(c.tags)},
          {"corpus",
           {{"min_token_length", c.min_token_length},
            {"lowercase", c.lowercase_tokens},
            {"alpha_only", c.alpha_only_tokens},
            {"extra_stop_words", c.extra_stop_words},
            {"coverage", c.coverage},
            {"epoch_span_days", c.epoch_span_days},
            {"epoch_step_days", c.epoch_step_days}}},
          {"train",
           {{"gamma", c.hyper.gamma},
            {"alpha0", c.hyper.alpha0},
            {"eta", c.hyper.eta},
            {"sweeps", c.sweeps},
            {"burn_in", c.burn_in},
            {"min_mass", c.min_mass},
            {"seed", c.seed}}},
          {"track",
           {{"tau_prune", c.tau_prune},
            {"similarity", c.similarity},
            {"top_k", c.top_k}}},
          {"jobs", c.jobs}};
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.input = j.value("input", c.input);
    c.work_dir = j.value("work_dir", c.work_dir);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.synth_plan = j.value("synth_plan", c.synth_plan);
    if (j.contains("ingest")) {
      const auto& i = j.at("ingest");
      c.stems = i.value("stems", c.stems);
      c.strict = i.value("strict", c.strict);
    }
    if (j.contains("fetch")) {
      const auto& f = j.at("fetch");
      if (f.contains("allowed_types")) {
        c.fetch.allowed_types.clear();
        for (const auto& t : f.at("allowed_types"))
          c.fetch.allowed_types.insert(t.get<std::string>());
      }
      c.fetch.max_redirects = f.value("max_redirects", c.fetch.max_redirects);
      c.fetch.max_body_bytes =
          f.value("max_body_bytes", c.fetch.max_body_bytes);
      c.fetch.timeout_ms = f.value("timeout_ms", c.fetch.timeout_ms);
      c.fetch.offline = f.value("offline", c.fetch.offline);
      c.fetch.verify_tls = f.value("verify_tls", c.fetch.verify_tls);
      c.fetch.parallelism = f.value("parallelism", c.fetch.parallelism);
      c.fetch.per_host_spacing_ms =
          f.value("per_host_spacing_ms", c.fetch.per_host_spacing_ms);
    }
    if (j.contains("tag_policy")) c.tags = tag_policy_from_json(j.at("tag_policy"));
    if (j.contains("corpus")) {
      const auto& co = j.at("corpus");
      c.min_token_length = co.value("min_token_length", c.min_token_length);
      c.lowercase_tokens = co.value("lowercase", c.lowercase_tokens);
      c.alpha_only_tokens = co.value("alpha_only", c.alpha_only_tokens);
      c.extra_stop_words = co.value("extra_stop_words", c.extra_stop_words);
      c.coverage = co.value("coverage", c.coverage);
      c.epoch_span_days = co.value("epoch_span_days", c.epoch_span_days);
      c.epoch_step_days = co.value("epoch_step_days", c.epoch_step_days);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.hyper.gamma = t.value("gamma", c.hyper.gamma);
      c.hyper.alpha0 = t.value("alpha0", c.hyper.alpha0);
      c.hyper.eta = t.value("eta", c.hyper.eta);
      c.sweeps = t.value("sweeps", c.sweeps);
      c.burn_in = t.value("burn_in", c.burn_in);
      c.min_mass = t.value("min_mass", c.min_mass);
      c.seed = t.value("seed", c.seed);
    }
    if (j.contains("track")) {
      const auto& t = j.at("track");
      c.tau_prune = t.value("tau_prune", c.tau_prune);
      c.similarity = t.value("similarity", c.similarity);
      c.top_k = t.value("top_k", c.top_k);
    }
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

enum class Stage { ingest, fetch, extract, corpus, train, track, report, synth };

inline std::optional<Stage> stage_from_name(const std::string& name) {
  static const std::map<std::string, Stage> names = {
      {"ingest", Stage::ingest}, {"fetch", Stage::fetch},
      {"extract", Stage::extract}, {"corpus", Stage::corpus},
      {"train", Stage::train}, {"track", Stage::track},
      {"report", Stage::report}, {"synth", Stage::synth}};
  const auto it = names.find(name);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

namespace detail {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

inline void write_file_atomic(const fs::path& path, const std::string& data) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw PipelineError("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw PipelineError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void require_artifact(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path))
    throw MissingPrereqError("missing " + path.string() + "; run " + stage +
                             " first");
}

inline std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw PipelineError(path.string() + ":" + std::to_string(line_no) +
                          ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw PipelineError(path.string() + ": " + e.what());
  }
}

/// Provenance record: the config hash plus a hash of every file read and
/// written. No timestamps, so reruns with unchanged inputs are byte-stable.
class Manifest {
 public:
  Manifest(const PipelineConfig& cfg, std::string stage)
      : stage_(std::move(stage)),
        config_sha_(sha256_hex(to_json(cfg).dump())) {}

  void add_input(const fs::path& path) {
    inputs_[path.string()] = sha256_hex(read_file(path));
  }
  void add_output(const fs::path& path) {
    outputs_[path.string()] = sha256_hex(read_file(path));
  }

  void write(const fs::path& work_dir) const {
    const nlohmann::json j = {{"stage", stage_},
                              {"config_sha256", config_sha_},
                              {"inputs", inputs_},
                              {"outputs", outputs_}};
    write_file_atomic(work_dir / "manifests" / (stage_ + ".json"),
                      j.dump(2) + "\n");
  }

 private:
  std::string stage_;
  std::string config_sha_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

inline std::string epoch_file_name(std::size_t e) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%04zu.json", e);
  return buf;
}

inline std::string format_phi(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace detail

inline nlohmann::json read_json_file(const std::string& path) {
  return detail::read_json(path);
}

// ---- stages ---------------------------------------------------------------

/// ingest: raw tweet JSONL -> keyword-filtered tweets.jsonl + report.
inline std::vector<std::filesystem::path> stage_ingest(
    const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.input.empty())
    throw ConfigError("ingest: no input file configured");
  if (!fs::exists(cfg.input))
    throw ConfigError("ingest: input file not found: " + cfg.input);

  detail::Manifest manifest(cfg, "ingest");
  manifest.add_input(cfg.input);

  IngestResult result;
  try {
    result = parse_tweet_stream(cfg.input, cfg.strict);
  } catch (const IngestError& e) {
    throw PipelineError(e.what());
  }
  std::vector<TweetRecord> kept;
  for (const auto& rec : result.records)
    if (keyword_filter(rec, cfg.stems)) kept.push_back(rec);

  std::string lines;
  for (const auto& rec : kept) lines += to_json(rec).dump() + "\n";
  const fs::path work(cfg.work_dir);
  const fs::path tweets = work / "tweets.jsonl";
  detail::write_file_atomic(tweets, lines);

  nlohmann::json report = to_json(result.report);
  report["matched"] = kept.size();
  report["stats"] = to_json(url_stats(kept));
  const fs::path report_path = work / "ingest_report.json";
  detail::write_file_atomic(report_path, report.dump(2) + "\n");

  manifest.add_output(tweets);
  manifest.add_output(report_path);
  manifest.write(work);
  return {tweets, report_path};
}

/// fetch: tweets.jsonl -> pages.jsonl (one outcome per unique canonical URL)
/// plus the page cache.
inline std::vector<std::filesystem::path> stage_fetch(
    const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path work(cfg.work_dir);
  const fs::path tweets_path = work / "tweets.jsonl";
  detail::require_artifact(tweets_path, "ingest");

  detail::Manifest manifest(cfg, "fetch");
  manifest.add_input(tweets_path);

  const auto result = parse_tweet_stream(tweets_path.string(), true);
  std::set<std::string> unique;
  std::size_t bad_urls = 0;
  for (const auto& rec : result.records) {
    for (const auto& url : rec.urls) {
      try {
        unique.insert(canonicalize_url(url));
      } catch (const UrlError&) {
        ++bad_urls;
      }
    }
  }
  const std::vector<std::string> urls(unique.begin(), unique.end());

  PageCache cache{fs::path(cfg.cache_dir)};
  const auto results = fetch_all(urls, cfg.fetch, &cache,
                                 static_cast<std::size_t>(cfg.jobs));
  cache.save();

  std::string lines;
  std::map<std::string, std::size_t> outcome_counts;
  for (const auto& r : results) {
    lines += to_json(r).dump() + "\n";
    ++outcome_counts[fetch_outcome_name(r.outcome)];
  }
  const fs::path pages = work / "pages.jsonl";
  detail::write_file_atomic(pages, lines);

  const nlohmann::json report = {{"urls", urls.size()},
                                 {"invalid_urls", bad_urls},
                                 {"outcomes", outcome_counts}};
  const fs::path report_path = work / "fetch_report.json";
  detail::write_file_atomic(report_path, report.dump(2) + "\n");

  manifest.add_output(pages);
  manifest.add_output(report_path);
  manifest.write(work);
  return {pages, report_path};
}

/// extract: pages.jsonl + cache bodies -> pagetexts.jsonl keyed by final URL.
inline std::vector<std::filesystem::path> stage_extract(
    const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path work(cfg.work_dir);
  const fs::path pages_path = work / "pages.jsonl";
  detail::require_artifact(pages_path, "fetch");

  detail::Manifest manifest(cfg, "extract");
  manifest.add_input(pages_path);

  PageCache cache{fs::path(cfg.cache_dir)};
  struct PageText {
    std::string text;
    std::set<std::string> requested;
  };
  std::map<std::string, PageText> texts;  // final URL -> extraction
  std::size_t ok_pages = 0, empty_texts = 0;
  for (const auto& line : detail::read_jsonl(pages_path)) {
    if (line.at("outcome").get<std::string>() != "ok") continue;
    ++ok_pages;
    const auto requested = line.at("requested_url").get<std::string>();
    const auto final_url = line.at("final_url").get<std::string>();
    const auto hit = cache.lookup(requested);
    if (!hit)
      throw PipelineError("page body for " + requested +
                          " missing from cache " + cfg.cache_dir);
    const auto [it, fresh] = texts.try_emplace(final_url);
    it->second.requested.insert(requested);
    if (fresh) it->second.text = extract_main_text(hit->body, cfg.tags);
  }

  std::string lines;
  for (const auto& [final_url, entry] : texts) {
    if (entry.text.empty()) ++empty_texts;
    const nlohmann::json j = {
        {"doc_id", final_url},
        {"requested_urls",
         std::vector<std::string>(entry.requested.begin(),
                                  entry.requested.end())},
        {"text", entry.text}};
    lines += j.dump() + "\n";
  }
  const fs::path texts_path = work / "pagetexts.jsonl";
  detail::write_file_atomic(texts_path, lines);

  const nlohmann::json report = {{"pages_ok", ok_pages},
                                 {"documents", texts.size()},
                                 {"empty_texts", empty_texts}};
  const fs::path report_path = work / "extract_report.json";
  detail::write_file_atomic(report_path, report.dump(2) + "\n");

  manifest.add_output(texts_path);
  manifest.add_output(report_path);
  manifest.write(work);
  return {texts_path, report_path};
}

/// corpus: join tweets with page texts, build the dictionary, bag-of-words
/// documents, and overlapping epoch slices.
inline std::vector<std::filesystem::path> stage_corpus(
    const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path work(cfg.work_dir);
  const fs::path tweets_path = work / "tweets.jsonl";
  const fs::path texts_path = work / "pagetexts.jsonl";
  detail::require_artifact(tweets_path, "ingest");
  detail::require_artifact(texts_path, "extract");

  detail::Manifest manifest(cfg, "corpus");
  manifest.add_input(tweets_path);
  manifest.add_input(texts_path);

  // canonical tweet URL -> linking tweets
  const auto tweets = parse_tweet_stream(tweets_path.string(), true);
  std::map<std::string, std::vector<const TweetRecord*>> by_url;
  for (const auto& rec : tweets.records) {
    for (const auto& url : rec.urls) {
      try {
        by_url[canonicalize_url(url)].push_back(&rec);
      } catch (const UrlError&) {
        // already reported by the fetch stage
      }
    }
  }

  std::vector<WebDocument> docs;
  for (const auto& line : detail::read_jsonl(texts_path)) {
    WebDocument doc;
    doc.doc_id = line.at("doc_id").get<std::string>();
    doc.text = line.at("text").get<std::string>();
    std::map<std::string, UtcSeconds> linking;  // tweet id -> first timestamp
    for (const auto& req : line.at("requested_urls")) {
      const auto it = by_url.find(req.get<std::string>());
      if (it == by_url.end()) continue;
      for (const TweetRecord* rec : it->second)
        linking.emplace(rec->tweet_id, rec->created_at);
    }
    if (linking.empty()) continue;  // page no longer referenced by any tweet
    for (const auto& [tweet_id, ts] : linking) {
      doc.linked_tweet_ids.push_back(tweet_id);
      doc.timestamps.push_back(ts);
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty())
    throw PipelineError("corpus: no documents with linked tweets; nothing to model");

  const TokenRules rules = cfg.token_rules();
  std::map<std::string, std::uint64_t> counts;
  for (const auto& doc : docs)
    for (const auto& tok : tokenize(doc.text, rules)) ++counts[tok];
  if (counts.empty())
    throw PipelineError("corpus: tokenization produced no terms");
  const Dictionary dict = build_dictionary(counts, cfg.coverage);

  std::vector<WebDocument> modeled;
  std::string doc_lines;
  std::size_t empty_docs = 0;
  for (const auto& doc : docs) {
    const auto bow = to_bow(doc, dict, rules);
    if (!bow) {
      ++empty_docs;
      continue;
    }
    nlohmann::json j = to_json(*bow);
    j["linked_tweet_ids"] = doc.linked_tweet_ids;
    nlohmann::json ts = nlohmann::json::array();
    for (const auto t : doc.timestamps) ts.push_back(format_utc(t));
    j["timestamps"] = std::move(ts);
    doc_lines += j.dump() + "\n";
    modeled.push_back(doc);
  }
  if (modeled.empty())
    throw PipelineError("corpus: every document fell outside the dictionary");

  const auto slices =
      slice_epochs(modeled, cfg.epoch_span_days * kSecondsPerDay,
                   cfg.epoch_step_days * kSecondsPerDay);

  const fs::path dict_path = work / "dictionary.json";
  detail::write_file_atomic(dict_path, to_json(dict).dump(2) + "\n");
  const fs::path docs_path = work / "docs.jsonl";
  detail::write_file_atomic(docs_path, doc_lines);

  nlohmann::json slice_list = nlohmann::json::array();
  for (const auto& s : slices) slice_list.push_back(to_json(s));
  const nlohmann::json epochs = {
      {"span_seconds", cfg.epoch_span_days * kSecondsPerDay},
      {"step_seconds", cfg.epoch_step_days * kSecondsPerDay},
      {"slices", std::move(slice_list)}};
  const fs::path epochs_path = work / "epochs.json";
  detail::write_file_atomic(epochs_path, epochs.dump(2) + "\n");

  const nlohmann::json report = {{"documents", docs.size()},
                                 {"modeled", modeled.size()},
                                 {"empty_documents", empty_docs},
                                 {"dictionary_terms", dict.size()},
                                 {"coverage", dict.coverage},
                                 {"epochs", slices.size()}};
  const fs::path report_path = work / "corpus_report.json";
  detail::write_file_atomic(report_path, report.dump(2) + "\n");

  manifest.add_output(dict_path);
  manifest.add_output(docs_path);
  manifest.add_output(epochs_path);
  manifest.add_output(report_path);
  manifest.write(work);
  return {dict_path, docs_path, epochs_path, report_path};
}

/// synth: scripted plan -> corpus-format artifacts plus the ground truth.
inline std::vector<std::filesystem::path> stage_synth(
    const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.synth_plan.empty())
    throw ConfigError("synth: no plan file configured");
  if (!fs::exists(cfg.synth_plan))
    throw ConfigError("synth: plan file not found: " + cfg.synth_plan);

  detail::Manifest manifest(cfg, "synth");
  manifest.add_input(cfg.synth_plan);

  SynthOutput out;
  try {
    const SynthPlan plan = plan_from_json(detail::read_json(cfg.synth_plan));
    out = generate(plan);
  } catch (const SynthError& e) {
    throw ConfigError(e.what());
  }

  const fs::path work(cfg.work_dir);
  const fs::path dict_path = work / "dictionary.json";
  detail::write_file_atomic(dict_path, to_json(out.dictionary).dump(2) + "\n");

  std::string doc_lines;
  for (const auto& epoch : out.epochs) {
    for (const auto& bow : epoch.docs) {
      nlohmann::json j = to_json(bow);
      j["linked_tweet_ids"] = nlohmann::json::array();
      j["timestamps"] = nlohmann::json::array();
      doc_lines += j.dump() + "\n";
    }
  }
  const fs::path docs_path = work / "docs.jsonl";
  detail::write_file_atomic(docs_path, doc_lines);

  nlohmann::json slice_list = nlohmann::json::array();
  for (const auto& s : out.slices) slice_list.push_back(to_json(s));
  const nlohmann::json epochs = {{"span_seconds", kSecondsPerDay},
                                 {"step_seconds", kSecondsPerDay},
                                 {"slices", std::move(slice_list)}};
  const fs::path epochs_path = work / "epochs.json";
  detail::write_file_atomic(epochs_path, epochs.dump(2) + "\n");

  nlohmann::json truth_events = nlohmann::json::array();
  for (const auto& ev : out.truth) {
    nlohmann::json related = nlohmann::json::array();
    for (const auto& r : ev.related) related.push_back(node_ref_json(r));
    truth_events.push_back({{"kind", event_kind_name(ev.kind)},
                            {"epoch", ev.epoch_index},
                            {"node", node_ref_json(ev.node)},
                            {"related", std::move(related)}});
  }
  const nlohmann::json truth = {{"dynamics", std::move(truth_events)}};
  const fs::path truth_path = work / "truth.json";
  detail::write_file_atomic(truth_path, truth.dump(2) + "\n");

  manifest.add_output(dict_path);
  manifest.add_output(docs_path);
  manifest.add_output(epochs_path);
  manifest.add_output(truth_path);
  manifest.write(work);
  return {dict_path, docs_path, epochs_path, truth_path};
}

/// train: one HDP chain per epoch slice, checkpointed under topics/.
inline std::vector<std::filesystem::path> stage_train(
    const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path work(cfg.work_dir);
  const fs::path dict_path = work / "dictionary.json";
  const fs::path docs_path = work / "docs.jsonl";
  const fs::path epochs_path = work / "epochs.json";
  detail::require_artifact(dict_path, "corpus");
  detail::require_artifact(docs_path, "corpus");
  detail::require_artifact(epochs_path, "corpus");

  detail::Manifest manifest(cfg, "train");
  manifest.add_input(dict_path);
  manifest.add_input(docs_path);
  manifest.add_input(epochs_path);

  const Dictionary dict = dictionary_from_json(detail::read_json(dict_path));
  const auto vocab = static_cast<std::uint32_t>(dict.size());

  std::map<std::string, BowDocument> bows;
  for (const auto& line : detail::read_jsonl(docs_path)) {
    BowDocument bow = bow_from_json(line);
    const std::string id = bow.doc_id;
    if (!bows.emplace(id, std::move(bow)).second)
      throw PipelineError("docs.jsonl: duplicate doc_id " + id);
  }

  const nlohmann::json epochs_json = detail::read_json(epochs_path);
  std::vector<EpochSlice> slices;
  for (const auto& s : epochs_json.at("slices"))
    slices.push_back(epoch_slice_from_json(s));

  std::vector<fs::path> written;
  for (std::size_t e = 0; e < slices.size(); ++e) {
    const EpochSlice& slice = slices[e];
    if (slice.epoch_index != e)
      throw PipelineError("epochs.json: slice order does not match indices");
    std::vector<BowDocument> slice_docs;
    for (const auto& id : slice.doc_ids) {
      const auto it = bows.find(id);
      if (it != bows.end()) slice_docs.push_back(it->second);
    }

    EpochCheckpoint cp;
    const std::uint64_t epoch_seed = derive_seed(cfg.seed, e);
    if (slice_docs.empty()) {
      cp.epoch_index = static_cast<int>(e);
      cp.epoch_start = slice.start;
      cp.vocab_size = vocab;
      cp.hyper = cfg.hyper;
      cp.seed = epoch_seed;
      cp.sweeps = cfg.sweeps;
      cp.burn_in = cfg.burn_in;
    } else {
      const ChainResult chain =
          run_chain(slice_docs, vocab, cfg.hyper, epoch_seed, cfg.sweeps,
                    cfg.burn_in);
      cp = make_checkpoint(chain.state, cfg.hyper, cfg.sweeps, cfg.burn_in,
                           chain.log_trace.back(), cfg.min_mass,
                           static_cast<int>(e), slice.start);
    }
    const fs::path path = work / "topics" / detail::epoch_file_name(e);
    detail::write_file_atomic(path, to_json(cp).dump(2) + "\n");
    manifest.add_output(path);
    written.push_back(path);
  }
  if (written.empty()) throw PipelineError("train: no epoch slices to fit");
  manifest.write(work);
  return written;
}

namespace detail {

inline std::vector<EpochCheckpoint> load_checkpoints(const fs::path& work) {
  const fs::path dir = work / "topics";
  require_artifact(dir, "train");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw MissingPrereqError("no checkpoints under " +
                                              dir.string() +
                                              "; run train first");
  std::vector<EpochCheckpoint> cps;
  for (const auto& f : files) cps.push_back(checkpoint_from_json(read_json(f)));
  for (std::size_t e = 0; e < cps.size(); ++e) {
    if (cps[e].epoch_index != static_cast<int>(e))
      throw PipelineError("checkpoint epoch indices are not contiguous");
  }
  return cps;
}

}  // namespace detail

/// track: checkpoints -> similarity graph, event list, per-epoch stats.
inline std::vector<std::filesystem::path> stage_track(
    const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path work(cfg.work_dir);
  const auto cps = detail::load_checkpoints(work);

  detail::Manifest manifest(cfg, "track");
  for (std::size_t e = 0; e < cps.size(); ++e)
    manifest.add_input(work / "topics" / detail::epoch_file_name(e));

  std::vector<std::vector<Topic>> epoch_topics;
  for (const auto& cp : cps) epoch_topics.push_back(cp.topics);

  const EvolutionGraph graph =
      build_graph(epoch_topics, cfg.tau_prune, cfg.similarity_spec());
  const auto events = classify_events(graph);
  const auto stats = epoch_stats(graph, events);

  const fs::path graph_json = work / "graph.json";
  detail::write_file_atomic(graph_json, to_json(graph, events).dump(2) + "\n");
  const fs::path graph_dot = work / "graph.dot";
  detail::write_file_atomic(graph_dot, to_dot(graph));
  const fs::path stats_path = work / "stats.csv";
  detail::write_file_atomic(stats_path, stats_csv(stats));

  manifest.add_output(graph_json);
  manifest.add_output(graph_dot);
  manifest.add_output(stats_path);
  manifest.write(work);
  return {graph_json, graph_dot, stats_path};
}

/// report: word-cloud CSVs (top-50 phi terms per topic) and tweet-level
/// topic mixtures propagated from the page documents.
inline std::vector<std::filesystem::path> stage_report(
    const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path work(cfg.work_dir);
  const fs::path dict_path = work / "dictionary.json";
  const fs::path docs_path = work / "docs.jsonl";
  const fs::path graph_path = work / "graph.json";
  detail::require_artifact(dict_path, "corpus");
  detail::require_artifact(docs_path, "corpus");
  detail::require_artifact(graph_path, "track");
  const auto cps = detail::load_checkpoints(work);

  detail::Manifest manifest(cfg, "report");
  manifest.add_input(dict_path);
  manifest.add_input(docs_path);
  manifest.add_input(graph_path);
  for (std::size_t e = 0; e < cps.size(); ++e)
    manifest.add_input(work / "topics" / detail::epoch_file_name(e));

  const Dictionary dict = dictionary_from_json(detail::read_json(dict_path));
  std::vector<fs::path> written;

  // word clouds: one term,weight CSV per retained topic
  for (const auto& cp : cps) {
    for (const auto& topic : cp.topics) {
      std::vector<std::uint32_t> order(topic.phi.size());
      for (std::uint32_t v = 0; v < order.size(); ++v) order[v] = v;
      std::sort(order.begin(), order.end(),
                [&topic](std::uint32_t a, std::uint32_t b) {
                  if (topic.phi[a] != topic.phi[b])
                    return topic.phi[a] > topic.phi[b];
                  return a < b;
                });
      if (order.size() > 50) order.resize(50);
      std::string csv = "term,weight\n";
      for (const auto v : order)
        csv += dict.terms[v] + "," + detail::format_phi(topic.phi[v]) + "\n";
      char name[48];
      std::snprintf(name, sizeof(name), "e%04d_t%04d.csv", cp.epoch_index,
                    topic.topic_id);
      const fs::path path = work / "wordclouds" / name;
      detail::write_file_atomic(path, csv);
      manifest.add_output(path);
      written.push_back(path);
    }
  }

  // tweet mixtures: average the mixtures of each tweet's modeled documents
  std::map<std::string, std::vector<std::string>> tweet_links;
  for (const auto& line : detail::read_jsonl(docs_path)) {
    const auto doc_id = line.at("doc_id").get<std::string>();
    for (const auto& t : line.value("linked_tweet_ids",
                                    std::vector<std::string>{}))
      tweet_links[t].push_back(doc_id);
  }

  std::string tweet_lines;
  std::size_t mapped = 0, skipped_total = 0;
  for (const auto& cp : cps) {
    std::set<int> retained;
    for (const auto& t : cp.topics) retained.insert(t.topic_id);
    std::map<std::string, std::map<std::string, double>> doc_mix;
    for (const auto& [doc_id, mix] : cp.doc_mixtures) {
      std::map<std::string, double> filtered;
      double total = 0.0;
      for (const auto& [topic, w] : mix) {
        if (!retained.count(topic)) continue;
        filtered[std::to_string(topic)] = w;
        total += w;
      }
      if (filtered.empty() || total <= 0.0) continue;
      for (auto& [topic, w] : filtered) w /= total;
      doc_mix.emplace(doc_id, std::move(filtered));
    }
    std::size_t skipped = 0;
    const auto tweet_mix = propagate_topics(doc_mix, tweet_links, &skipped);
    skipped_total += skipped;
    for (const auto& [tweet_id, mix] : tweet_mix) {
      nlohmann::json topics = nlohmann::json::object();
      for (const auto& [topic, w] : mix) topics[topic] = w;
      const nlohmann::json j = {{"epoch", cp.epoch_index},
                                {"tweet_id", tweet_id},
                                {"topics", std::move(topics)}};
      tweet_lines += j.dump() + "\n";
      ++mapped;
    }
  }
  const fs::path tweet_path = work / "tweet_topics.jsonl";
  detail::write_file_atomic(tweet_path, tweet_lines);
  manifest.add_output(tweet_path);
  written.push_back(tweet_path);

  std::size_t total_topics = 0;
  for (const auto& cp : cps) total_topics += cp.topics.size();
  const nlohmann::json graph_json = detail::read_json(graph_path);
  std::map<std::string, std::size_t> event_counts;
  for (const auto& ev : graph_json.at("events"))
    ++event_counts[ev.at("kind").get<std::string>()];
  const nlohmann::json summary = {{"epochs", cps.size()},
                                  {"topics", total_topics},
                                  {"events", event_counts},
                                  {"tweet_mixtures", mapped},
                                  {"tweets_skipped", skipped_total}};
  const fs::path summary_path = work / "report.json";
  detail::write_file_atomic(summary_path, summary.dump(2) + "\n");
  manifest.add_output(summary_path);
  written.push_back(summary_path);

  manifest.write(work);
  return written;
}

inline std::vector<std::filesystem::path> run_stage(
    Stage stage, const PipelineConfig& cfg) {
  cfg.validate();
  switch (stage) {
    case Stage::ingest: return stage_ingest(cfg);
    case Stage::fetch: return stage_fetch(cfg);
    case Stage::extract: return stage_extract(cfg);
    case Stage::corpus: return stage_corpus(cfg);
    case Stage::train: return stage_train(cfg);
    case Stage::track: return stage_track(cfg);
    case Stage::report: return stage_report(cfg);
    case Stage::synth: return stage_synth(cfg);
  }
  throw PipelineError("unknown stage");
}

/// Full pipeline. With an input file: ingest through report. With only a
/// synth plan: synth, train, track, report.
inline std::vector<std::filesystem::path> run_all(const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<Stage> stages;
  if (!cfg.input.empty()) {
    stages = {Stage::ingest, Stage::fetch, Stage::extract, Stage::corpus,
              Stage::train, Stage::track, Stage::report};
  } else if (!cfg.synth_plan.empty()) {
    stages = {Stage::synth, Stage::train, Stage::track, Stage::report};
  } else {
    throw ConfigError("run: configure either an input file or a synth plan");
  }
  std::vector<std::filesystem::path> all;
  for (const Stage s : stages) {
    auto written = run_stage(s, cfg);
    all.insert(all.end(), written.begin(), written.end());
  }
  return all;
}

}  // namespace topicflow
