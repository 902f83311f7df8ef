#pragma once

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

namespace topicflow {

class ExtractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tag-level extraction policy: subtrees under drop_subtree tags are removed
/// wholesale, keep tags mark main-content roots, and everything else is
/// transparent (the unwrap set names the formatting tags this applies to).
struct TagPolicy {
  std::unordered_set<std::string> drop_subtree;
  std::unordered_set<std::string> unwrap;
  std::unordered_set<std::string> keep;

  static TagPolicy defaults() {
    return TagPolicy{
        {"comment", "meta", "header", "menu", "rss", "sponsor", "script",
         "style", "nav", "footer", "aside"},
        {"font", "div", "p", "span", "b", "i", "em", "strong", "a"},
        {"main", "article", "blog"}};
  }

  void validate() const {
    const auto check_lower = [](const std::unordered_set<std::string>& set,
                                const char* which) {
      for (const auto& t : set) {
        for (char c : t) {
          if (std::isupper(static_cast<unsigned char>(c)))
            throw ExtractError(std::string("policy ") + which +
                               " tag not lowercase: '" + t + "'");
        }
      }
    };
    check_lower(drop_subtree, "drop_subtree");
    check_lower(unwrap, "unwrap");
    check_lower(keep, "keep");
    for (const auto& t : drop_subtree) {
      if (unwrap.count(t) || keep.count(t))
        throw ExtractError("policy sets overlap on tag '" + t + "'");
    }
    for (const auto& t : unwrap) {
      if (keep.count(t))
        throw ExtractError("policy sets overlap on tag '" + t + "'");
    }
  }
};

inline nlohmann::json to_json(const TagPolicy& p) {
  const auto sorted = [](const std::unordered_set<std::string>& s) {
    std::vector<std::string> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
  };
  return nlohmann::json{{"drop_subtree", sorted(p.drop_subtree)},
                        {"unwrap", sorted(p.unwrap)},
                        {"keep", sorted(p.keep)}};
}

inline TagPolicy tag_policy_from_json(const nlohmann::json& j) {
  TagPolicy p;
  const auto read = [&j](const char* key,
                         std::unordered_set<std::string>& out) {
    if (auto it = j.find(key); it != j.end()) {
      for (const auto& t : *it) out.insert(t.get<std::string>());
    }
  };
  read("drop_subtree", p.drop_subtree);
  read("unwrap", p.unwrap);
  read("keep", p.keep);
  p.validate();
  return p;
}

namespace detail {

inline constexpr std::size_t kMaxNestingDepth = 256;

inline bool is_void_element(const std::string& t) {
  static const std::unordered_set<std::string> kVoid = {
      "area", "base",  "br",   "col",  "embed", "hr",    "img",
      "input", "link", "meta", "param", "source", "track", "wbr"};
  return kVoid.count(t) != 0;
}

// Tags whose boundaries do not separate words ("merely removed").
inline bool is_inline_element(const std::string& t) {
  static const std::unordered_set<std::string> kInline = {
      "a",   "abbr", "b",    "bdi",  "bdo",  "cite", "code",  "data",
      "dfn", "em",   "font", "i",    "kbd",  "mark", "q",     "rp",
      "rt",  "ruby", "s",    "samp", "small", "span", "strike", "strong",
      "sub", "sup",  "time", "tt",   "u",    "var",  "wbr"};
  return kInline.count(t) != 0;
}

inline bool is_rawtext_element(const std::string& t) {
  return t == "script" || t == "style" || t == "textarea";
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp <= 0x7f) {
    out += static_cast<char>(cp);
  } else if (cp <= 0x7ff) {
    out += static_cast<char>(0xc0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp <= 0xffff) {
    out += static_cast<char>(0xe0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp <= 0x10ffff) {
    out += static_cast<char>(0xf0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  }
}

// Decodes "&name;" / "&#123;" / "&#xAB;". `s` points just past the '&'.
// Returns the decoded text and advances `i` past the entity, or returns
// nullopt leaving `i` untouched.
inline bool decode_entity(std::string_view s, std::size_t& i,
                          std::string& out) {
  const std::size_t end = s.find(';', i);
  if (end == std::string_view::npos || end == i || end - i > 10) return false;
  const std::string_view body = s.substr(i, end - i);
  if (body[0] == '#') {
    std::uint32_t cp = 0;
    bool any = false;
    if (body.size() > 2 && (body[1] == 'x' || body[1] == 'X')) {
      for (std::size_t k = 2; k < body.size(); ++k) {
        const char c = body[k];
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else return false;
        cp = cp * 16 + static_cast<std::uint32_t>(d);
        any = true;
      }
    } else {
      for (std::size_t k = 1; k < body.size(); ++k) {
        const char c = body[k];
        if (c < '0' || c > '9') return false;
        cp = cp * 10 + static_cast<std::uint32_t>(c - '0');
        any = true;
      }
    }
    if (!any || cp > 0x10ffff) return false;
    if (cp == 0xa0) cp = ' ';
    append_utf8(out, cp);
    i = end + 1;
    return true;
  }
  struct Named {
    std::string_view name;
    std::uint32_t cp;
  };
  static constexpr Named kNamed[] = {
      {"amp", '&'},      {"lt", '<'},      {"gt", '>'},     {"quot", '"'},
      {"apos", '\''},    {"nbsp", ' '},    {"mdash", 0x2014},
      {"ndash", 0x2013}, {"hellip", 0x2026}, {"lsquo", 0x2018},
      {"rsquo", 0x2019}, {"ldquo", 0x201c}, {"rdquo", 0x201d},
      {"copy", 0xa9},    {"reg", 0xae},    {"trade", 0x2122},
      {"deg", 0xb0},     {"middot", 0xb7}, {"bull", 0x2022},
      {"laquo", 0xab},   {"raquo", 0xbb},  {"times", 0xd7},
      {"shy", 0}};
  for (const auto& e : kNamed) {
    if (body == e.name) {
      if (e.cp != 0) append_utf8(out, e.cp);
      i = end + 1;
      return true;
    }
  }
  return false;
}

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '&') {
      std::size_t j = i + 1;
      if (decode_entity(s, j, out)) {
        i = j;
        continue;
      }
    }
    out += c;
    ++i;
  }
  return out;
}

// Collapses whitespace runs to single spaces, trims, and replaces bytes that
// do not form valid UTF-8 with whitespace (lossy decode).
inline std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  std::size_t i = 0;
  const auto put = [&out, &pending_space](std::string_view chunk) {
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out.append(chunk);
  };
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x21) {  // ASCII whitespace and control chars
      pending_space = true;
      ++i;
      continue;
    }
    if (c < 0x80) {
      put(s.substr(i, 1));
      ++i;
      continue;
    }
    // multi-byte sequence
    std::size_t len = 0;
    std::uint32_t min_cp = 0;
    if ((c & 0xe0) == 0xc0) { len = 2; min_cp = 0x80; }
    else if ((c & 0xf0) == 0xe0) { len = 3; min_cp = 0x800; }
    else if ((c & 0xf8) == 0xf0) { len = 4; min_cp = 0x10000; }
    if (len == 0 || i + len > s.size()) {
      pending_space = true;
      ++i;
      continue;
    }
    std::uint32_t cp = c & (0x7f >> len);
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    if (!ok || cp < min_cp || cp > 0x10ffff ||
        (cp >= 0xd800 && cp <= 0xdfff)) {
      pending_space = true;
      ++i;
      continue;
    }
    if (cp == 0xa0) {  // non-breaking space
      pending_space = true;
      i += len;
      continue;
    }
    put(s.substr(i, len));
    i += len;
  }
  return out;
}

class HtmlTextExtractor {
 public:
  explicit HtmlTextExtractor(const TagPolicy& policy) : policy_(policy) {}

  std::string run(std::string_view html) {
    pos_ = 0;
    html_ = html;
    while (pos_ < html_.size()) {
      const std::size_t lt = html_.find('<', pos_);
      if (lt == std::string_view::npos) {
        text(html_.substr(pos_));
        break;
      }
      if (lt > pos_) text(html_.substr(pos_, lt - pos_));
      pos_ = lt;
      markup();
    }
    while (!stack_.empty()) pop_one();
    return normalize_whitespace(keep_seen_ ? keep_buf_ : body_buf_);
  }

 private:
  struct Open {
    std::string name;
    bool dropped;
    bool keep_root;
  };

  void text(std::string_view raw) {
    if (drop_depth_ > 0 || raw.empty()) return;
    const std::string decoded = decode_entities(raw);
    body_buf_ += decoded;
    if (keep_depth_ > 0) keep_buf_ += decoded;
  }

  void separator() {
    if (drop_depth_ > 0) return;
    body_buf_ += ' ';
    if (keep_depth_ > 0) keep_buf_ += ' ';
  }

  void markup() {
    // pos_ points at '<'
    if (html_.compare(pos_, 4, "<!--") == 0) {
      const auto end = html_.find("-->", pos_ + 4);
      pos_ = end == std::string_view::npos ? html_.size() : end + 3;
      return;
    }
    if (pos_ + 1 < html_.size() &&
        (html_[pos_ + 1] == '!' || html_[pos_ + 1] == '?')) {
      const auto end = html_.find('>', pos_);
      pos_ = end == std::string_view::npos ? html_.size() : end + 1;
      return;
    }
    const bool closing = pos_ + 1 < html_.size() && html_[pos_ + 1] == '/';
    const std::size_t name_start = pos_ + (closing ? 2 : 1);
    if (name_start >= html_.size() ||
        !std::isalpha(static_cast<unsigned char>(html_[name_start]))) {
      text(html_.substr(pos_, 1));  // literal '<'
      ++pos_;
      return;
    }
    std::size_t i = name_start;
    std::string name;
    while (i < html_.size()) {
      const char c = html_[i];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
          c == '_' || c == ':') {
        name += static_cast<char>(
            std::tolower(static_cast<unsigned char>(c)));
        ++i;
      } else {
        break;
      }
    }
    // skip attributes, honoring quoted values
    bool self_closing = false;
    while (i < html_.size() && html_[i] != '>') {
      const char c = html_[i];
      if (c == '"' || c == '\'') {
        const auto q = html_.find(c, i + 1);
        i = q == std::string_view::npos ? html_.size() : q + 1;
        continue;
      }
      self_closing = (c == '/');
      ++i;
    }
    if (i >= html_.size()) {  // unterminated tag: drop the rest
      pos_ = html_.size();
      return;
    }
    pos_ = i + 1;

    if (closing) {
      close_tag(name);
    } else {
      (void)self_closing;  // HTML5: '/' on a non-void start tag is ignored
      open_tag(name);
    }
  }

  void open_tag(const std::string& name) {
    const bool blocky = !is_inline_element(name);
    if (is_void_element(name)) {  // no subtree
      if (blocky) separator();
      return;
    }
    if (is_rawtext_element(name)) {
      if (blocky) separator();
      rawtext(name);
      if (blocky) separator();
      return;
    }
    if (stack_.size() >= kMaxNestingDepth)
      throw ExtractError("tag nesting exceeds depth limit");
    const bool drops = policy_.drop_subtree.count(name) != 0;
    // a keep tag nested inside a dropped subtree is dropped
    const bool keep_root =
        !drops && drop_depth_ == 0 && policy_.keep.count(name) != 0;
    // a keep root's boundary separator must land inside the keep buffer,
    // a drop tag's must land outside the dropped region
    if (blocky && !keep_root) separator();
    stack_.push_back(Open{name, drops, keep_root});
    if (drops) ++drop_depth_;
    if (keep_root) {
      ++keep_depth_;
      keep_seen_ = true;
      if (blocky) separator();
    }
  }

  void close_tag(const std::string& name) {
    // find matching open element; ignore stray closers
    for (std::size_t d = stack_.size(); d-- > 0;) {
      if (stack_[d].name == name) {
        const bool keep_root = stack_[d].keep_root;
        const bool blocky = !is_inline_element(name);
        if (blocky && keep_root) separator();
        while (stack_.size() > d) pop_one();
        if (blocky && !keep_root) separator();
        return;
      }
    }
  }

  void pop_one() {
    const Open top = stack_.back();
    stack_.pop_back();
    if (top.dropped) --drop_depth_;
    if (top.keep_root) --keep_depth_;
  }

  // script/style/textarea content runs to the matching close tag with no
  // markup interpretation
  void rawtext(const std::string& name) {
    const std::string closer = "</" + name;
    std::size_t i = pos_;
    std::size_t content_end = html_.size();
    std::size_t resume = html_.size();
    while (i + closer.size() <= html_.size()) {
      bool match = true;
      for (std::size_t k = 0; k < closer.size(); ++k) {
        if (std::tolower(static_cast<unsigned char>(html_[i + k])) !=
            closer[k]) {
          match = false;
          break;
        }
      }
      if (match) {
        content_end = i;
        const auto gt = html_.find('>', i);
        resume = gt == std::string_view::npos ? html_.size() : gt + 1;
        break;
      }
      ++i;
    }
    const bool dropped =
        drop_depth_ > 0 || policy_.drop_subtree.count(name) != 0;
    if (!dropped) {
      if (name == "textarea") {
        text(html_.substr(pos_, content_end - pos_));
      } else {
        // script/style reachable only if the policy stopped dropping them
        body_buf_ += html_.substr(pos_, content_end - pos_);
        if (keep_depth_ > 0)
          keep_buf_ += html_.substr(pos_, content_end - pos_);
      }
    }
    pos_ = resume;
  }

  const TagPolicy& policy_;
  std::string_view html_;
  std::size_t pos_ = 0;
  std::vector<Open> stack_;
  int drop_depth_ = 0;
  int keep_depth_ = 0;
  bool keep_seen_ = false;
  std::string keep_buf_;
  std::string body_buf_;
};

}  // namespace detail

/// Extracts main text from an HTML byte string. Subtrees under drop tags
/// contribute nothing; if any keep-tag subtree survives dropping, the output
/// is the keep subtrees' text in document order, otherwise the whole-body
/// text after drops. The result is whitespace-normalized.
inline std::string extract_main_text(std::string_view html,
                                     const TagPolicy& policy) {
  policy.validate();
  if (html.empty()) return "";
  detail::HtmlTextExtractor extractor(policy);
  return extractor.run(html);
}

inline std::string extract_main_text(std::string_view html) {
  return extract_main_text(html, TagPolicy::defaults());
}

}  // namespace topicflow
