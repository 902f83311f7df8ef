#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "topicflow/digest.hpp"
#include "topicflow/time.hpp"
#include "topicflow/url.hpp"

namespace topicflow {

class FetchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FetchOutcome {
  ok,
  rejected_type,  // live response with a disallowed Content-Type
  http_error,     // non-2xx, non-3xx status
  network_error,
  timeout,
  redirect_loop,  // cycle or too many hops
  body_too_large,
};

inline const char* fetch_outcome_name(FetchOutcome o) {
  switch (o) {
    case FetchOutcome::ok: return "ok";
    case FetchOutcome::rejected_type: return "rejected_type";
    case FetchOutcome::http_error: return "http_error";
    case FetchOutcome::network_error: return "network_error";
    case FetchOutcome::timeout: return "timeout";
    case FetchOutcome::redirect_loop: return "redirect_loop";
    case FetchOutcome::body_too_large: return "body_too_large";
  }
  return "?";
}

inline std::optional<FetchOutcome> fetch_outcome_from_name(
    const std::string& name) {
  for (const FetchOutcome o :
       {FetchOutcome::ok, FetchOutcome::rejected_type, FetchOutcome::http_error,
        FetchOutcome::network_error, FetchOutcome::timeout,
        FetchOutcome::redirect_loop, FetchOutcome::body_too_large}) {
    if (name == fetch_outcome_name(o)) return o;
  }
  return std::nullopt;
}

struct FetchPolicy {
  std::set<std::string> allowed_types = {"text/html", "application/xhtml+xml"};
  int max_redirects = 5;
  std::size_t max_body_bytes = 4 * 1024 * 1024;
  int timeout_ms = 10000;
  bool offline = false;
  bool verify_tls = true;
  int parallelism = 4;
  int per_host_spacing_ms = 250;

  void validate() const {
    if (allowed_types.empty())
      throw FetchError("fetch policy: empty media-type allowlist");
    if (max_redirects < 0 || timeout_ms <= 0 || max_body_bytes == 0 ||
        parallelism <= 0 || per_host_spacing_ms < 0)
      throw FetchError("fetch policy: out-of-range numeric field");
  }
};

struct FetchResult {
  std::string requested_url;  // canonical form of what the caller asked for
  std::string final_url;      // canonical URL that produced the response
  int status = 0;
  std::string content_type;  // media type only, lowercased
  std::string body;
  UtcSeconds fetched_at = 0;
  FetchOutcome outcome = FetchOutcome::network_error;
  std::string error;  // human-readable detail for failure outcomes
  bool from_cache = false;

  bool ok() const { return outcome == FetchOutcome::ok; }
};

namespace detail {

// "text/HTML; charset=utf-8" -> "text/html"
inline std::string media_type_of(const std::string& content_type) {
  std::string out = content_type.substr(0, content_type.find(';'));
  while (!out.empty() && (out.back() == ' ' || out.back() == '\t'))
    out.pop_back();
  std::size_t start = 0;
  while (start < out.size() && (out[start] == ' ' || out[start] == '\t'))
    ++start;
  return ascii_lower(out.substr(start));
}

}  // namespace detail

/// Replayable on-disk page store: a JSON manifest maps canonical requested
/// URLs to outcome metadata, bodies live in content-addressed files. A
/// secondary index by canonical final URL lets two shorteners that resolve
/// to the same page share one body. First writer of a key wins.
class PageCache {
 public:
  explicit PageCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_ / "bodies");
    const auto manifest = dir_ / "manifest.json";
    if (!std::filesystem::exists(manifest)) return;
    std::ifstream in(manifest);
    nlohmann::json j;
    try {
      in >> j;
      for (const auto& [url, e] : j.at("entries").items()) {
        Entry entry;
        entry.final_url = e.at("final_url").get<std::string>();
        entry.status = e.at("status").get<int>();
        entry.content_type = e.at("content_type").get<std::string>();
        entry.body_sha256 = e.value("body_sha256", "");
        entry.fetched_at = e.at("fetched_at").get<UtcSeconds>();
        const auto outcome =
            fetch_outcome_from_name(e.at("outcome").get<std::string>());
        if (!outcome) throw FetchError("cache manifest: unknown outcome");
        entry.outcome = *outcome;
        entries_.emplace(url, std::move(entry));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw FetchError("unreadable cache manifest " + manifest.string() +
                       ": " + ex.what());
    }
    for (const auto& [url, entry] : entries_)
      final_index_.emplace(entry.final_url, url);
  }

  std::optional<FetchResult> lookup(const std::string& canonical_url) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(canonical_url);
    if (it == entries_.end()) {
      const auto fin = final_index_.find(canonical_url);
      if (fin == final_index_.end()) return std::nullopt;
      it = entries_.find(fin->second);
    }
    const Entry& e = it->second;
    FetchResult r;
    r.requested_url = canonical_url;
    r.final_url = e.final_url;
    r.status = e.status;
    r.content_type = e.content_type;
    r.fetched_at = e.fetched_at;
    r.outcome = e.outcome;
    r.from_cache = true;
    if (!e.body_sha256.empty()) r.body = read_body(e.body_sha256);
    return r;
  }

  /// Inserts the result under its requested URL. Returns false (and keeps
  /// the existing entry) when the key is already present.
  bool store(const FetchResult& r) {
    std::lock_guard<std::mutex> lock(mu_);
    if (entries_.count(r.requested_url)) return false;
    Entry e;
    e.final_url = r.final_url;
    e.status = r.status;
    e.content_type = r.content_type;
    e.fetched_at = r.fetched_at;
    e.outcome = r.outcome;
    if (!r.body.empty()) {
      e.body_sha256 = sha256_hex(r.body);
      const auto path = dir_ / "bodies" / e.body_sha256;
      if (!std::filesystem::exists(path)) {
        const auto tmp = path.string() + ".tmp";
        std::ofstream out(tmp, std::ios::binary);
        out.write(r.body.data(), static_cast<std::streamsize>(r.body.size()));
        out.close();
        std::filesystem::rename(tmp, path);
      }
    }
    final_index_.emplace(e.final_url, r.requested_url);
    entries_.emplace(r.requested_url, std::move(e));
    return true;
  }

  void save() const {
    std::lock_guard<std::mutex> lock(mu_);
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& [url, e] : entries_) {
      entries[url] = {{"final_url", e.final_url},
                      {"status", e.status},
                      {"content_type", e.content_type},
                      {"body_sha256", e.body_sha256},
                      {"fetched_at", e.fetched_at},
                      {"outcome", fetch_outcome_name(e.outcome)}};
    }
    const nlohmann::json j = {{"version", 1}, {"entries", std::move(entries)}};
    const auto manifest = dir_ / "manifest.json";
    const auto tmp = manifest.string() + ".tmp";
    std::ofstream out(tmp, std::ios::binary);
    out << j.dump(2) << "\n";
    out.close();
    std::filesystem::rename(tmp, manifest);
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
  }

 private:
  struct Entry {
    std::string final_url;
    int status = 0;
    std::string content_type;
    std::string body_sha256;  // empty when no body was kept
    UtcSeconds fetched_at = 0;
    FetchOutcome outcome = FetchOutcome::network_error;
  };

  std::string read_body(const std::string& sha) const {
    const auto path = dir_ / "bodies" / sha;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FetchError("cache body missing: " + path.string());
    std::string body((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return body;
  }

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> final_index_;  // final -> requested key
};

namespace detail {

struct HopResponse {
  FetchOutcome outcome = FetchOutcome::ok;
  int status = 0;
  std::string content_type;  // media type
  std::string location;      // raw Location header on redirects
  std::string body;
  std::string error;
};

// One GET without following redirects. Content-type gating cancels the
// transfer right after the headers; the receiver caps the body size.
inline HopResponse fetch_hop(const ParsedUrl& url, const FetchPolicy& policy) {
  HopResponse hop;
  httplib::Client client(url.scheme + "://" + url.authority());
  client.set_follow_location(false);
  client.set_connection_timeout(std::chrono::milliseconds(policy.timeout_ms));
  client.set_read_timeout(std::chrono::milliseconds(policy.timeout_ms));
  client.set_write_timeout(std::chrono::milliseconds(policy.timeout_ms));
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
  client.enable_server_certificate_verification(policy.verify_tls);
#endif

  std::string target = url.path.empty() ? "/" : url.path;
  if (url.has_query) target += "?" + url.query;

  bool rejected = false;
  bool oversize = false;
  const httplib::Headers headers = {{"User-Agent", "topicflow/1.0"},
                                    {"Accept", "*/*"}};
  auto res = client.Get(
      target, headers,
      [&](const httplib::Response& response) {
        hop.status = response.status;
        hop.content_type =
            media_type_of(response.get_header_value("Content-Type"));
        hop.location = response.get_header_value("Location");
        const bool redirect = response.status >= 300 && response.status < 400;
        const bool success = response.status >= 200 && response.status < 300;
        if (success && !policy.allowed_types.count(hop.content_type)) {
          rejected = true;
          return false;  // cancel before the body arrives
        }
        if (!success && !redirect) return false;  // headers are enough
        return true;
      },
      [&](const char* data, std::size_t len) {
        hop.body.append(data, len);
        if (hop.body.size() > policy.max_body_bytes) {
          oversize = true;
          return false;
        }
        return true;
      });

  if (rejected) {
    hop.outcome = FetchOutcome::rejected_type;
    hop.body.clear();
    return hop;
  }
  if (oversize) {
    hop.outcome = FetchOutcome::body_too_large;
    hop.body.clear();
    hop.error = "body exceeds " + std::to_string(policy.max_body_bytes) +
                " bytes";
    return hop;
  }
  if (!res && res.error() != httplib::Error::Canceled) {
    hop.outcome = res.error() == httplib::Error::ConnectionTimeout
                      ? FetchOutcome::timeout
                      : FetchOutcome::network_error;
    hop.error = httplib::to_string(res.error());
    return hop;
  }
  // canceled-after-headers for non-2xx/3xx lands here with status filled in
  if (hop.status >= 300 && hop.status < 400) return hop;
  if (hop.status < 200 || hop.status >= 300) {
    hop.outcome = FetchOutcome::http_error;
    hop.error = "HTTP status " + std::to_string(hop.status);
    hop.body.clear();
  }
  return hop;
}

}  // namespace detail

/// Resolves one URL: cache first, then the network, following redirects
/// manually so every hop target can be answered from the cache. Terminal
/// semantic outcomes (ok / rejected_type / http_error) are written back to
/// the cache; transient failures are not, so they can be retried later.
inline FetchResult fetch_page(const std::string& url,
                              const FetchPolicy& policy,
                              PageCache* cache = nullptr) {
  policy.validate();
  FetchResult result;
  result.requested_url = canonicalize_url(url);
  result.fetched_at = static_cast<UtcSeconds>(std::time(nullptr));

  if (cache) {
    if (auto hit = cache->lookup(result.requested_url)) {
      hit->requested_url = result.requested_url;
      return *hit;
    }
  }
  if (policy.offline) {
    result.outcome = FetchOutcome::network_error;
    result.error = "offline mode: URL not in cache";
    return result;
  }

  std::set<std::string> visited;
  std::string current = result.requested_url;
  for (int hops = 0; hops <= policy.max_redirects; ++hops) {
    if (!visited.insert(current).second) {
      result.outcome = FetchOutcome::redirect_loop;
      result.error = "redirect cycle via " + current;
      result.final_url = current;
      return result;
    }
    if (cache && current != result.requested_url) {
      if (auto hit = cache->lookup(current)) {
        result.final_url = hit->final_url;
        result.status = hit->status;
        result.content_type = hit->content_type;
        result.body = hit->body;
        result.outcome = hit->outcome;
        result.error = hit->error;
        if (cache->store(result)) cache->save();
        return result;
      }
    }

    const auto parsed = parse_url(current);
    if (!parsed) {
      result.outcome = FetchOutcome::network_error;
      result.error = "unparseable URL: " + current;
      result.final_url = current;
      return result;
    }
    const detail::HopResponse hop = detail::fetch_hop(*parsed, policy);
    result.final_url = current;
    result.status = hop.status;
    result.content_type = hop.content_type;

    if (hop.outcome != FetchOutcome::ok) {
      result.outcome = hop.outcome;
      result.error = hop.error;
      const bool semantic = hop.outcome == FetchOutcome::rejected_type ||
                            hop.outcome == FetchOutcome::http_error;
      if (semantic && cache && cache->store(result)) cache->save();
      return result;
    }
    if (hop.status >= 300 && hop.status < 400) {
      if (hop.location.empty()) {
        result.outcome = FetchOutcome::http_error;
        result.error = "redirect without Location header";
        return result;
      }
      const auto next = resolve_reference(current, hop.location);
      if (!next) {
        result.outcome = FetchOutcome::network_error;
        result.error = "unresolvable Location: " + hop.location;
        return result;
      }
      try {
        current = canonicalize_url(*next);
      } catch (const UrlError& e) {
        result.outcome = FetchOutcome::network_error;
        result.error = e.what();
        return result;
      }
      continue;
    }
    result.outcome = FetchOutcome::ok;
    result.body = hop.body;
    if (cache && cache->store(result)) cache->save();
    return result;
  }
  result.outcome = FetchOutcome::redirect_loop;
  result.error = "more than " + std::to_string(policy.max_redirects) +
                 " redirects";
  result.final_url = current;
  return result;
}

/// Fetches a batch under bounded parallelism with per-host minimum spacing.
/// Results come back in input order.
inline std::vector<FetchResult> fetch_all(const std::vector<std::string>& urls,
                                          const FetchPolicy& policy,
                                          PageCache* cache = nullptr,
                                          std::size_t jobs = 0) {
  policy.validate();
  if (jobs == 0) jobs = static_cast<std::size_t>(policy.parallelism);
  jobs = std::min(jobs, urls.size());
  std::vector<FetchResult> results(urls.size());
  if (urls.empty()) return results;

  std::mutex host_mu;
  std::map<std::string, std::chrono::steady_clock::time_point> next_slot;
  const auto spacing = std::chrono::milliseconds(policy.per_host_spacing_ms);

  const auto wait_for_host = [&](const std::string& host) {
    std::chrono::steady_clock::time_point wake;
    {
      std::lock_guard<std::mutex> lock(host_mu);
      const auto now = std::chrono::steady_clock::now();
      auto& slot = next_slot[host];
      if (slot < now) slot = now;
      wake = slot;
      slot += spacing;
    }
    std::this_thread::sleep_until(wake);
  };

  std::atomic<std::size_t> cursor{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= urls.size()) return;
      try {
        const std::string canon = canonicalize_url(urls[i]);
        const bool cached = cache && cache->lookup(canon).has_value();
        if (!cached && !policy.offline) {
          if (const auto parsed = parse_url(canon)) wait_for_host(parsed->host);
        }
        results[i] = fetch_page(urls[i], policy, cache);
      } catch (const UrlError& e) {
        results[i].requested_url = urls[i];
        results[i].outcome = FetchOutcome::network_error;
        results[i].error = e.what();
      }
    }
  };

  if (jobs <= 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return results;
}

inline nlohmann::json to_json(const FetchResult& r) {
  return {{"requested_url", r.requested_url},
          {"final_url", r.final_url},
          {"status", r.status},
          {"content_type", r.content_type},
          {"outcome", fetch_outcome_name(r.outcome)},
          {"error", r.error},
          {"fetched_at", r.fetched_at},
          {"body_bytes", r.body.size()},
          {"from_cache", r.from_cache}};
}

}  // namespace topicflow
