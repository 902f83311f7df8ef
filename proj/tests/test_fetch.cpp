#include <catch2/catch_amalgamated.hpp>

#include <topicflow/fetch.hpp>

#include "support.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

using namespace topicflow;

namespace {

// one shared fixture server for the whole binary
class FixtureServer {
 public:
  FixtureServer() {
    server_.Get("/ok", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<p>hello fetch</p>", "text/html; charset=utf-8");
    });
    server_.Get("/a", [this](const httplib::Request&, httplib::Response& res) {
      res.status = 302;
      res.set_header("Location", url("/b"));
    });
    server_.Get("/b", [](const httplib::Request&, httplib::Response& res) {
      res.status = 301;
      res.set_header("Location", "/c");  // relative form
    });
    server_.Get("/c", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<p>end of chain</p>", "text/html");
    });
    server_.Get("/loop1", [](const httplib::Request&, httplib::Response& res) {
      res.status = 302;
      res.set_header("Location", "/loop2");
    });
    server_.Get("/loop2", [](const httplib::Request&, httplib::Response& res) {
      res.status = 302;
      res.set_header("Location", "/loop1");
    });
    server_.Get("/video", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("####binary####", "video/mp4");
    });
    server_.Get("/big", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(std::string(100000, 'x'), "text/html");
    });
    server_.Get("/missing",
                [](const httplib::Request&, httplib::Response& res) {
                  res.status = 404;
                  res.set_content("gone", "text/html");
                });
    server_.Get("/counted",
                [this](const httplib::Request&, httplib::Response& res) {
                  ++hits_;
                  res.set_content("<p>counted</p>", "text/html");
                });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    while (!server_.is_running())
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  ~FixtureServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  int hits() const { return hits_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
};

FixtureServer& server() {
  static FixtureServer s;
  return s;
}

FetchPolicy quick_policy() {
  FetchPolicy p;
  p.timeout_ms = 5000;
  p.per_host_spacing_ms = 0;
  return p;
}

}  // namespace

TEST_CASE("fetch_page returns the body and normalized content type") {
  const auto r = fetch_page(server().url("/ok"), quick_policy());
  CHECK(r.ok());
  CHECK(r.status == 200);
  CHECK(r.content_type == "text/html");  // charset parameter stripped
  CHECK(r.body == "<p>hello fetch</p>");
  CHECK(r.final_url == r.requested_url);
  CHECK_FALSE(r.from_cache);
  CHECK(r.fetched_at > 0);
}

TEST_CASE("redirect chains resolve absolute and relative locations") {
  const auto r = fetch_page(server().url("/a"), quick_policy());
  CHECK(r.ok());
  CHECK(r.requested_url == server().url("/a"));
  CHECK(r.final_url == server().url("/c"));
  CHECK(r.body == "<p>end of chain</p>");
}

TEST_CASE("redirect cycles and hop budgets end in redirect_loop") {
  const auto r = fetch_page(server().url("/loop1"), quick_policy());
  CHECK(r.outcome == FetchOutcome::redirect_loop);
  CHECK(r.body.empty());

  FetchPolicy tight = quick_policy();
  tight.max_redirects = 1;
  const auto budget = fetch_page(server().url("/a"), tight);
  CHECK(budget.outcome == FetchOutcome::redirect_loop);
}

TEST_CASE("disallowed content types are rejected without body") {
  const auto r = fetch_page(server().url("/video"), quick_policy());
  CHECK(r.outcome == FetchOutcome::rejected_type);
  CHECK(r.body.empty());
  CHECK(r.content_type == "video/mp4");

  FetchPolicy loose = quick_policy();
  loose.allowed_types.insert("video/mp4");
  CHECK(fetch_page(server().url("/video"), loose).ok());
}

TEST_CASE("oversized bodies are cut off") {
  FetchPolicy small = quick_policy();
  small.max_body_bytes = 1024;
  const auto r = fetch_page(server().url("/big"), small);
  CHECK(r.outcome == FetchOutcome::body_too_large);
}

TEST_CASE("http errors carry their status") {
  const auto r = fetch_page(server().url("/missing"), quick_policy());
  CHECK(r.outcome == FetchOutcome::http_error);
  CHECK(r.status == 404);
}

TEST_CASE("unreachable hosts and bad urls are network errors") {
  FetchPolicy p = quick_policy();
  p.timeout_ms = 2000;
  const auto refused = fetch_page("http://127.0.0.1:9/x", p);  // discard port
  CHECK((refused.outcome == FetchOutcome::network_error ||
         refused.outcome == FetchOutcome::timeout));
  CHECK_THROWS_AS(fetch_page("not a url", p), UrlError);
}

TEST_CASE("media_type_of strips parameters and case") {
  CHECK(detail::media_type_of("TEXT/HTML; charset=UTF-8") == "text/html");
  CHECK(detail::media_type_of("application/xhtml+xml") ==
        "application/xhtml+xml");
  CHECK(detail::media_type_of("  text/plain ;q=1") == "text/plain");
  CHECK(detail::media_type_of("") == "");
}

TEST_CASE("cache round-trips bodies and survives reload") {
  const auto dir = testutil::fresh_dir("cache");
  {
    PageCache cache(dir);
    const auto live = fetch_page(server().url("/counted"), quick_policy(),
                                 &cache);
    REQUIRE(live.ok());
    CHECK_FALSE(live.from_cache);
    cache.save();
  }
  const int hits_after_live = server().hits();
  {
    PageCache cache(dir);
    const auto cached = fetch_page(server().url("/counted"), quick_policy(),
                                   &cache);
    REQUIRE(cached.ok());
    CHECK(cached.from_cache);
    CHECK(cached.body == "<p>counted</p>");
    CHECK(server().hits() == hits_after_live);  // no second request
  }
}

TEST_CASE("offline mode serves hits and fails misses") {
  const auto dir = testutil::fresh_dir("offline");
  PageCache cache(dir);
  FetchPolicy online = quick_policy();
  REQUIRE(fetch_page(server().url("/ok"), online, &cache).ok());

  FetchPolicy offline = quick_policy();
  offline.offline = true;
  const auto hit = fetch_page(server().url("/ok"), offline, &cache);
  CHECK(hit.ok());
  CHECK(hit.from_cache);
  const auto miss = fetch_page(server().url("/never-fetched"), offline,
                               &cache);
  CHECK(miss.outcome == FetchOutcome::network_error);
  CHECK(miss.error.find("offline") != std::string::npos);
}

TEST_CASE("semantic failures are cached, transient ones are not") {
  const auto dir = testutil::fresh_dir("semantics");
  PageCache cache(dir);
  const auto p = quick_policy();
  REQUIRE(fetch_page(server().url("/missing"), p, &cache).outcome ==
          FetchOutcome::http_error);
  REQUIRE(fetch_page(server().url("/video"), p, &cache).outcome ==
          FetchOutcome::rejected_type);

  FetchPolicy offline = p;
  offline.offline = true;
  CHECK(fetch_page(server().url("/missing"), offline, &cache).outcome ==
        FetchOutcome::http_error);
  CHECK(fetch_page(server().url("/video"), offline, &cache).outcome ==
        FetchOutcome::rejected_type);
  // the loop failure was transient: not in the cache
  REQUIRE(fetch_page(server().url("/loop1"), p, &cache).outcome ==
          FetchOutcome::redirect_loop);
  CHECK(fetch_page(server().url("/loop1"), offline, &cache).outcome ==
        FetchOutcome::network_error);
}

TEST_CASE("fetch_all preserves input order across outcomes") {
  const std::vector<std::string> urls{
      server().url("/ok"), server().url("/missing"), server().url("/c"),
      server().url("/video")};
  const auto results = fetch_all(urls, quick_policy(), nullptr, 3);
  REQUIRE(results.size() == 4);
  CHECK(results[0].ok());
  CHECK(results[1].outcome == FetchOutcome::http_error);
  CHECK(results[2].ok());
  CHECK(results[3].outcome == FetchOutcome::rejected_type);
  for (std::size_t i = 0; i < urls.size(); ++i)
    CHECK(results[i].requested_url == canonicalize_url(urls[i]));
}

TEST_CASE("fetch result json reports sizes not bodies") {
  const auto r = fetch_page(server().url("/ok"), quick_policy());
  const auto j = to_json(r);
  CHECK(j.at("requested_url") == r.requested_url);
  CHECK(j.at("outcome") == "ok");
  CHECK(j.at("body_bytes").get<std::size_t>() == r.body.size());
  CHECK_FALSE(j.contains("body"));
}
