#pragma once

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace topicflow {

class UrlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParsedUrl {
  std::string scheme;
  std::string userinfo;  // without the trailing '@'
  std::string host;
  int port = -1;  // -1 when absent
  std::string path;
  bool has_query = false;
  std::string query;
  // fragment is parsed but never kept

  std::string authority() const {
    std::string a;
    if (!userinfo.empty()) a += userinfo + "@";
    a += host;
    if (port >= 0) a += ":" + std::to_string(port);
    return a;
  }

  std::string str() const {
    std::string s = scheme + "://" + authority() + path;
    if (has_query) s += "?" + query;
    return s;
  }
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool valid_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])))
    return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' &&
        c != '.')
      return false;
  }
  return true;
}

}  // namespace detail

/// Splits an absolute URL of the scheme://authority... form. Fragments are
/// discarded during parsing. Returns nullopt for anything else.
inline std::optional<ParsedUrl> parse_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos || scheme_end == 0)
    return std::nullopt;
  ParsedUrl out;
  out.scheme = std::string(url.substr(0, scheme_end));
  if (!detail::valid_scheme(out.scheme)) return std::nullopt;

  std::string_view rest = url.substr(scheme_end + 3);
  const auto auth_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, auth_end);
  rest = auth_end == std::string_view::npos ? std::string_view{}
                                            : rest.substr(auth_end);

  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    out.userinfo = std::string(authority.substr(0, at));
    authority = authority.substr(at + 1);
  }
  if (const auto colon = authority.rfind(':');
      colon != std::string_view::npos &&
      authority.find(']') == std::string_view::npos) {
    std::string_view port_s = authority.substr(colon + 1);
    if (port_s.empty()) return std::nullopt;
    int port = 0;
    for (char c : port_s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      port = port * 10 + (c - '0');
      if (port > 65535) return std::nullopt;
    }
    out.port = port;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) return std::nullopt;
  out.host = std::string(authority);

  if (!rest.empty() && rest[0] == '/') {
    const auto path_end = rest.find_first_of("?#");
    out.path = std::string(rest.substr(0, path_end));
    rest = path_end == std::string_view::npos ? std::string_view{}
                                              : rest.substr(path_end);
  }
  if (!rest.empty() && rest[0] == '?') {
    out.has_query = true;
    const auto frag = rest.find('#');
    out.query = std::string(rest.substr(1, frag == std::string_view::npos
                                               ? std::string_view::npos
                                               : frag - 1));
  }
  return out;
}

inline bool is_absolute_url(std::string_view url) {
  return parse_url(url).has_value();
}

inline int default_port(std::string_view scheme) {
  if (scheme == "http") return 80;
  if (scheme == "https") return 443;
  return -1;
}

/// Canonical form used as the cache / dedup key: scheme and host lowercased,
/// fragment removed, default port removed, empty path becomes "/", path and
/// query otherwise untouched.
inline std::string canonicalize_url(std::string_view url) {
  auto parsed = parse_url(url);
  if (!parsed)
    throw UrlError("not an absolute URL: '" + std::string(url) + "'");
  parsed->scheme = detail::ascii_lower(parsed->scheme);
  parsed->host = detail::ascii_lower(parsed->host);
  if (parsed->port == default_port(parsed->scheme)) parsed->port = -1;
  if (parsed->path.empty()) parsed->path = "/";
  return parsed->str();
}

/// Resolves a Location header value against the URL of the response it came
/// from. Handles absolute URLs, protocol-relative, absolute-path and
/// relative-path forms.
inline std::optional<std::string> resolve_reference(const std::string& base,
                                                    std::string_view ref) {
  if (ref.empty()) return std::nullopt;
  if (ref.find("://") != std::string_view::npos) {
    auto p = parse_url(ref);
    return p ? std::optional<std::string>(p->str()) : std::nullopt;
  }
  const auto b = parse_url(base);
  if (!b) return std::nullopt;
  if (ref.rfind("//", 0) == 0) {
    auto p = parse_url(b->scheme + ":" + std::string(ref));
    return p ? std::optional<std::string>(p->str()) : std::nullopt;
  }
  ParsedUrl out = *b;
  out.has_query = false;
  out.query.clear();
  if (ref[0] == '#') return std::nullopt;  // fragment-only: same resource
  std::string target;
  if (ref[0] == '/') {
    target = std::string(ref);
  } else {
    std::string dir = b->path.empty() ? "/" : b->path;
    dir = dir.substr(0, dir.rfind('/') + 1);
    target = dir + std::string(ref);
  }
  const auto qpos = target.find('?');
  const auto fpos = target.find('#');
  const auto path_end = std::min(qpos, fpos);
  out.path = target.substr(0, path_end);
  if (qpos != std::string::npos && qpos < fpos) {
    out.has_query = true;
    out.query = target.substr(qpos + 1, fpos == std::string::npos
                                            ? std::string::npos
                                            : fpos - qpos - 1);
  }
  return out.str();
}

}  // namespace topicflow
