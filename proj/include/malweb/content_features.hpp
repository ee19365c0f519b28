#pragma once

// robots.txt, HTML, JavaScript and CSS feature extraction. Pure functions,
// no network access; fetched bodies arrive in a FetchedPage.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "malweb/sample.hpp"
#include "malweb/url_lexical.hpp"

namespace malweb {

struct RobotsStats {
  bool exists = false;
  std::size_t length = 0;
  std::size_t disallow_count = 0;
  std::size_t allow_count = 0;
  std::size_t user_agent_count = 0;
  std::size_t comment_count = 0;
  std::size_t sitemap_count = 0;
  bool disallows_root = false;
  bool operator==(const RobotsStats&) const = default;
};

struct JsStats {
  std::size_t total_length = 0;
  std::size_t function_call_count = 0;
  std::size_t suspicious_call_count = 0;
  std::size_t browser_call_count = 0;
  std::size_t dom_call_count = 0;
  double avg_array_length = 0.0;
  std::size_t max_array_length = 0;
  bool operator==(const JsStats&) const = default;
};

struct CssStats {
  std::size_t total_length = 0;
  std::size_t hidden_element_count = 0;
  bool operator==(const CssStats&) const = default;
};

struct ContentFeatures {
  JsStats js;
  JsStats js_external;
  CssStats css;
  CssStats css_external;
  std::size_t content_length = 0;
  std::size_t script_tag_count = 0;
  bool contains_hex = false;
  std::size_t hex_length = 0;
  std::size_t url_count = 0;
  std::size_t unique_url_count = 0;
  std::size_t out_of_domain_img_count = 0;
  RobotsStats robots;
  bool operator==(const ContentFeatures&) const = default;
};

/// Name lists used by the JavaScript and CSS scanners.
///
/// A call name matches a list entry when it equals the entry, is rooted at
/// it ("window" matches "window.open") or ends with "." + entry
/// ("el.appendChild" matches "appendChild").
struct ScanLists {
  std::vector<std::string> suspicious;
  std::vector<std::string> browser;
  std::vector<std::string> dom;
  /// Declarations in "property:value" form, compared after normalization.
  std::vector<std::string> hidden_css;
  std::size_t hex_run_threshold = 16;
  /// Feed on*="..." attribute handlers into the inline JavaScript stats.
  bool include_event_handlers = false;

  static ScanLists defaults();
  static ScanLists from_json_text(std::string_view json_text);
  static ScanLists from_file(const std::string& path);
  std::string to_json_text() const;
};

RobotsStats parse_robots_txt(const std::optional<std::string>& body);

JsStats js_stats(std::string_view code, const std::vector<std::string>& suspicious,
                 const std::vector<std::string>& browser, const std::vector<std::string>& dom);

struct ArrayStats {
  double avg_array_length = 0.0;
  std::size_t max_array_length = 0;
};

/// Element counts of every array literal, nested ones included.
std::vector<std::size_t> js_array_lengths(std::string_view code);
ArrayStats js_array_stats(std::string_view code);

CssStats css_stats(std::string_view css_text, const std::vector<std::string>& hidden_rules);

/// Canonical form of a CSS declaration: lowercase, no whitespace, no
/// "!important", zero lengths collapsed to "0".
std::string normalize_css_declaration(std::string_view decl);

struct HexScan {
  bool contains_hex = false;
  std::size_t hex_length = 0;
};

/// Maximal runs of hex digits of at least `threshold` characters, ignoring
/// tag names.
HexScan scan_hex(std::string_view html, std::size_t threshold);

/// Absolute http(s) URLs appearing anywhere in the text, in order.
std::vector<std::string> find_absolute_urls(std::string_view text);

ContentFeatures extract_content_features(const FetchedPage& page, const ScanLists& lists,
                                         const PublicSuffixList& suffixes);

}  // namespace malweb
