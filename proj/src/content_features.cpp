#include "malweb/content_features.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "malweb/error.hpp"
#include "malweb/html.hpp"
#include "malweb/text.hpp"

namespace malweb {

// ---------------------------------------------------------------------------
// Scan lists

ScanLists ScanLists::defaults() {
  ScanLists l;
  l.suspicious = {"eval",       "unescape",    "escape",         "exec",
                  "atob",       "btoa",        "setTimeout",     "setInterval",
                  "document.write", "String.fromCharCode"};
  l.browser = {"window", "navigator", "location", "history", "screen"};
  l.dom = {"document",          "getElementById",         "getElementsByClassName",
           "getElementsByTagName", "getElementsByName",   "querySelector",
           "querySelectorAll",  "appendChild",            "removeChild",
           "insertBefore",      "replaceChild",           "createElement",
           "createTextNode",    "setAttribute",           "removeAttribute",
           "cloneNode"};
  l.hidden_css = {"display:none", "visibility:hidden", "opacity:0", "width:0", "height:0"};
  l.hex_run_threshold = 16;
  return l;
}

ScanLists ScanLists::from_json_text(std::string_view json_text) {
  ScanLists l = defaults();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
    if (j.contains("suspicious")) j.at("suspicious").get_to(l.suspicious);
    if (j.contains("browser")) j.at("browser").get_to(l.browser);
    if (j.contains("dom")) j.at("dom").get_to(l.dom);
    if (j.contains("hidden_css")) j.at("hidden_css").get_to(l.hidden_css);
    if (j.contains("hex_run_threshold")) j.at("hex_run_threshold").get_to(l.hex_run_threshold);
    if (j.contains("include_event_handlers")) j.at("include_event_handlers").get_to(l.include_event_handlers);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scan lists: ") + e.what());
  }
  if (l.hex_run_threshold == 0) throw ParseError("scan lists: hex_run_threshold must be >= 1");
  return l;
}

ScanLists ScanLists::from_file(const std::string& path) { return from_json_text(text::read_file(path)); }

std::string ScanLists::to_json_text() const {
  nlohmann::json j = {{"suspicious", suspicious},
                      {"browser", browser},
                      {"dom", dom},
                      {"hidden_css", hidden_css},
                      {"hex_run_threshold", hex_run_threshold},
                      {"include_event_handlers", include_event_handlers}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// robots.txt

RobotsStats parse_robots_txt(const std::optional<std::string>& body) {
  RobotsStats s;
  if (!body) return s;
  s.exists = true;
  for (auto line : text::split(*body, '\n')) {
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      ++s.comment_count;
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = text::trim(line.substr(0, colon));
    auto value = line.substr(colon + 1);
    if (const auto hash = value.find('#'); hash != std::string_view::npos) value = value.substr(0, hash);
    value = text::trim(value);

    if (text::iequals(key, "user-agent")) {
      ++s.user_agent_count;
    } else if (text::iequals(key, "disallow")) {
      ++s.disallow_count;
      if (value == "/") s.disallows_root = true;
    } else if (text::iequals(key, "allow")) {
      ++s.allow_count;
    } else if (text::iequals(key, "sitemap")) {
      ++s.sitemap_count;
    }
  }
  // CRLF counts as a single character so CRLF and LF bodies agree.
  std::size_t crlf = 0;
  for (std::size_t i = 0; i + 1 < body->size(); ++i) crlf += ((*body)[i] == '\r' && (*body)[i + 1] == '\n') ? 1 : 0;
  s.length = body->size() - crlf;
  return s;
}

// ---------------------------------------------------------------------------
// JavaScript

namespace {

bool is_ident_start(char c) { return text::is_alpha(c) || c == '_' || c == '$'; }
bool is_ident_char(char c) { return is_ident_start(c) || text::is_digit(c); }

const std::unordered_set<std::string_view>& non_call_keywords() {
  static const std::unordered_set<std::string_view> kw = {
      "if",     "for",    "while",      "switch", "catch", "with",  "function", "return",
      "typeof", "void",   "delete",     "in",     "of",    "instanceof", "do",   "else",
      "try",    "case",   "await",      "yield",  "throw", "var",   "let",      "const"};
  return kw;
}

bool name_matches(std::string_view name, const std::vector<std::string>& list) {
  for (const auto& entry : list) {
    if (entry.empty()) continue;
    if (name == entry) return true;
    if (name.size() > entry.size()) {
      if (name.compare(0, entry.size(), entry) == 0 && name[entry.size()] == '.') return true;
      const auto tail = name.size() - entry.size();
      if (name.compare(tail, entry.size(), entry) == 0 && name[tail - 1] == '.') return true;
    }
  }
  return false;
}

// Lexical scanner shared by call counting and array-literal measurement.
class JsScanner {
 public:
  JsScanner(const std::vector<std::string>* suspicious, const std::vector<std::string>* browser,
            const std::vector<std::string>* dom)
      : suspicious_(suspicious), browser_(browser), dom_(dom) {}

  void scan(std::string_view code) {
    stats_.total_length += code.size();
    stack_.clear();
    prev_ = Prev::None;
    prev_word_.clear();

    std::size_t i = 0;
    const std::size_t n = code.size();
    while (i < n) {
      const char c = code[i];
      if (text::is_space(c)) {
        ++i;
        continue;
      }
      if (c == '/' && i + 1 < n && code[i + 1] == '/') {
        const auto nl = code.find('\n', i);
        i = nl == std::string_view::npos ? n : nl + 1;
        continue;
      }
      if (c == '/' && i + 1 < n && code[i + 1] == '*') {
        const auto end = code.find("*/", i + 2);
        i = end == std::string_view::npos ? n : end + 2;
        continue;
      }
      if (c == '"' || c == '\'' || c == '`') {
        mark_content();
        i = skip_string(code, i);
        prev_ = Prev::Value;
        continue;
      }
      if (text::is_digit(c)) {
        mark_content();
        while (i < n && (is_ident_char(code[i]) || code[i] == '.')) ++i;
        prev_ = Prev::Value;
        continue;
      }
      if (is_ident_start(c)) {
        i = scan_identifier_chain(code, i);
        continue;
      }
      punct(c);
      ++i;
    }
  }

  JsStats finish() const {
    JsStats s = stats_;
    if (!array_lengths_.empty()) {
      std::size_t sum = 0;
      for (auto len : array_lengths_) sum += len;
      s.avg_array_length = static_cast<double>(sum) / static_cast<double>(array_lengths_.size());
      s.max_array_length = *std::max_element(array_lengths_.begin(), array_lengths_.end());
    }
    return s;
  }

  const std::vector<std::size_t>& array_lengths() const { return array_lengths_; }

 private:
  enum class Prev { None, Value, Keyword, Punct };

  struct Frame {
    bool is_array = false;
    std::size_t commas = 0;
    bool content_since_comma = false;
  };

  static std::size_t skip_string(std::string_view code, std::size_t i) {
    const char q = code[i++];
    while (i < code.size()) {
      if (code[i] == '\\') {
        i += 2;
        continue;
      }
      if (code[i] == q) return i + 1;
      ++i;
    }
    return code.size();
  }

  void mark_content() {
    if (!stack_.empty()) stack_.back().content_since_comma = true;
  }

  std::size_t scan_identifier_chain(std::string_view code, std::size_t i) {
    const std::size_t n = code.size();
    mark_content();
    std::string name;
    std::string first;
    std::size_t parts = 0;
    for (;;) {
      const std::size_t b = i;
      while (i < n && is_ident_char(code[i])) ++i;
      if (parts == 0) first = std::string(code.substr(b, i - b));
      if (!name.empty()) name += '.';
      name.append(code.substr(b, i - b));
      ++parts;
      std::size_t j = i;
      while (j < n && text::is_space(code[j])) ++j;
      if (j < n && code[j] == '.' && !(j + 1 < n && code[j + 1] == '.')) {
        std::size_t k = j + 1;
        while (k < n && text::is_space(code[k])) ++k;
        if (k < n && is_ident_start(code[k])) {
          i = k;
          continue;
        }
      }
      break;
    }

    std::size_t j = i;
    while (j < n && text::is_space(code[j])) ++j;
    const bool keyword = parts == 1 && non_call_keywords().count(first) > 0;
    const bool declared = prev_word_ == "function";
    if (j < n && code[j] == '(' && !keyword && !declared) record_call(name);

    prev_word_ = parts == 1 ? first : std::string();
    prev_ = keyword ? Prev::Keyword : Prev::Value;
    return i;
  }

  void record_call(std::string_view name) {
    ++stats_.function_call_count;
    if (suspicious_ && name_matches(name, *suspicious_)) ++stats_.suspicious_call_count;
    if (browser_ && name_matches(name, *browser_)) ++stats_.browser_call_count;
    if (dom_ && name_matches(name, *dom_)) ++stats_.dom_call_count;
  }

  void punct(char c) {
    prev_word_.clear();
    switch (c) {
      case '[': {
        const bool indexing = prev_ == Prev::Value;
        mark_content();
        stack_.push_back(Frame{!indexing, 0, false});
        prev_ = Prev::Punct;
        return;
      }
      case '(':
      case '{':
        mark_content();
        stack_.push_back(Frame{});
        prev_ = Prev::Punct;
        return;
      case ']':
      case ')':
      case '}': {
        if (!stack_.empty()) {
          const Frame f = stack_.back();
          stack_.pop_back();
          if (f.is_array) array_lengths_.push_back(f.commas + (f.content_since_comma ? 1 : 0));
        }
        prev_ = c == '}' ? Prev::Punct : Prev::Value;
        return;
      }
      case ',':
        if (!stack_.empty()) {
          ++stack_.back().commas;
          stack_.back().content_since_comma = false;
        }
        prev_ = Prev::Punct;
        return;
      default:
        mark_content();
        prev_ = Prev::Punct;
    }
  }

  const std::vector<std::string>* suspicious_;
  const std::vector<std::string>* browser_;
  const std::vector<std::string>* dom_;
  JsStats stats_;
  std::vector<Frame> stack_;
  std::vector<std::size_t> array_lengths_;
  Prev prev_ = Prev::None;
  std::string prev_word_;
};

}  // namespace

JsStats js_stats(std::string_view code, const std::vector<std::string>& suspicious,
                 const std::vector<std::string>& browser, const std::vector<std::string>& dom) {
  JsScanner scanner(&suspicious, &browser, &dom);
  scanner.scan(code);
  return scanner.finish();
}

std::vector<std::size_t> js_array_lengths(std::string_view code) {
  JsScanner scanner(nullptr, nullptr, nullptr);
  scanner.scan(code);
  return scanner.array_lengths();
}

ArrayStats js_array_stats(std::string_view code) {
  JsScanner scanner(nullptr, nullptr, nullptr);
  scanner.scan(code);
  const JsStats s = scanner.finish();
  return {s.avg_array_length, s.max_array_length};
}

// ---------------------------------------------------------------------------
// CSS

std::string normalize_css_declaration(std::string_view decl) {
  std::string compact;
  for (char c : decl)
    if (!text::is_space(c)) compact += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (const auto imp = compact.find("!important"); imp != std::string::npos) compact.erase(imp);

  const auto colon = compact.find(':');
  if (colon == std::string::npos) return compact;
  const std::string value = compact.substr(colon + 1);
  if (!value.empty()) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() && v == 0.0) {
      bool unit_only = true;
      for (const char* p = end; *p; ++p) unit_only = unit_only && (text::is_alpha(*p) || *p == '%');
      if (unit_only) return compact.substr(0, colon + 1) + "0";
    }
  }
  return compact;
}

CssStats css_stats(std::string_view css_text, const std::vector<std::string>& hidden_rules) {
  CssStats s;
  s.total_length = css_text.size();

  std::set<std::string> rules;
  for (const auto& r : hidden_rules) rules.insert(normalize_css_declaration(r));

  std::string segment;
  auto flush_declaration = [&] {
    if (segment.find(':') != std::string::npos && rules.count(normalize_css_declaration(segment)))
      ++s.hidden_element_count;
    segment.clear();
  };

  for (std::size_t i = 0; i < css_text.size(); ++i) {
    const char c = css_text[i];
    if (c == '/' && i + 1 < css_text.size() && css_text[i + 1] == '*') {
      const auto end = css_text.find("*/", i + 2);
      i = end == std::string_view::npos ? css_text.size() : end + 1;
      continue;
    }
    switch (c) {
      case '{':
        segment.clear();  // selector or at-rule prelude
        break;
      case ';':
      case '}':
        flush_declaration();
        break;
      default:
        segment += c;
    }
  }
  flush_declaration();
  return s;
}

// ---------------------------------------------------------------------------
// HTML-level scans

HexScan scan_hex(std::string_view html, std::size_t threshold) {
  std::vector<bool> masked(html.size(), false);
  for (const auto& tag : html::tokenize(html))
    for (std::size_t i = tag.name_begin; i < tag.name_end && i < masked.size(); ++i) masked[i] = true;

  HexScan out;
  std::size_t run = 0;
  auto close_run = [&] {
    if (run >= threshold) {
      out.contains_hex = true;
      out.hex_length += run;
    }
    run = 0;
  };
  for (std::size_t i = 0; i < html.size(); ++i) {
    if (!masked[i] && text::is_hex_digit(html[i])) {
      ++run;
    } else {
      close_run();
    }
  }
  close_run();
  return out;
}

std::vector<std::string> find_absolute_urls(std::string_view body) {
  std::vector<std::string> urls;
  auto stop = [](char c) {
    return text::is_space(c) || c == '"' || c == '\'' || c == '<' || c == '>' || c == '(' || c == ')' ||
           c == '`' || c == '\\';
  };
  std::size_t i = 0;
  while (i < body.size()) {
    std::size_t prefix = 0;
    if (text::starts_with_icase(body.substr(i), "https://")) {
      prefix = 8;
    } else if (text::starts_with_icase(body.substr(i), "http://")) {
      prefix = 7;
    }
    if (prefix == 0) {
      ++i;
      continue;
    }
    std::size_t j = i + prefix;
    while (j < body.size() && !stop(body[j])) ++j;
    if (j > i + prefix) urls.emplace_back(body.substr(i, j - i));
    i = j;
  }
  return urls;
}

namespace {

std::string registered_domain_or_empty(std::string_view url, const PublicSuffixList& suffixes) {
  try {
    return parse_url(url, suffixes).registered_domain();
  } catch (const UnparsableUrl&) {
    return {};
  }
}

}  // namespace

ContentFeatures extract_content_features(const FetchedPage& page, const ScanLists& lists,
                                         const PublicSuffixList& suffixes) {
  ContentFeatures f;
  const std::string_view doc = page.html;
  f.content_length = doc.size();

  const auto tags = html::tokenize(doc);
  const std::string page_domain = registered_domain_or_empty(page.final_url, suffixes);

  JsScanner inline_js(&lists.suspicious, &lists.browser, &lists.dom);
  std::size_t css_length = 0;
  std::size_t css_hidden = 0;
  auto add_css = [&](std::string_view css) {
    const CssStats c = css_stats(css, lists.hidden_css);
    css_length += c.total_length;
    css_hidden += c.hidden_element_count;
  };

  for (const auto& tag : tags) {
    if (tag.closing) continue;
    if (tag.name == "script") {
      ++f.script_tag_count;
      if (!tag.raw_text.empty()) inline_js.scan(tag.raw_text);
    } else if (tag.name == "style") {
      add_css(tag.raw_text);
    } else if (tag.name == "img") {
      const auto src = tag.attr("src");
      if (!src) continue;
      const auto v = text::trim(*src);
      const bool absolute = text::starts_with_icase(v, "http://") || text::starts_with_icase(v, "https://") ||
                            v.substr(0, 2) == "//";
      if (!absolute) continue;
      const std::string img_domain = registered_domain_or_empty(v, suffixes);
      if (!img_domain.empty() && img_domain != page_domain) ++f.out_of_domain_img_count;
    }
    for (const auto& a : tag.attributes) {
      if (a.name == "style") add_css(a.value);
      if (lists.include_event_handlers && a.name.size() > 2 && a.name.compare(0, 2, "on") == 0)
        inline_js.scan(a.value);
    }
  }
  f.js = inline_js.finish();
  f.css = {css_length, css_hidden};

  JsScanner external_js(&lists.suspicious, &lists.browser, &lists.dom);
  for (const auto& asset : page.external_js) external_js.scan(asset.body);
  f.js_external = external_js.finish();

  for (const auto& asset : page.external_css) {
    const CssStats c = css_stats(asset.body, lists.hidden_css);
    f.css_external.total_length += c.total_length;
    f.css_external.hidden_element_count += c.hidden_element_count;
  }

  const auto urls = find_absolute_urls(doc);
  f.url_count = urls.size();
  f.unique_url_count = std::set<std::string>(urls.begin(), urls.end()).size();

  const HexScan hex = scan_hex(doc, lists.hex_run_threshold);
  f.contains_hex = hex.contains_hex;
  f.hex_length = hex.hex_length;

  f.robots = parse_robots_txt(page.robots_body);
  return f;
}

}  // namespace malweb
