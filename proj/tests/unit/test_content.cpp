#include <random>

#include "doctest.h"
#include "malweb/content_features.hpp"

using namespace malweb;

namespace {

const ScanLists& lists() {
  static const ScanLists l = ScanLists::defaults();
  return l;
}

const PublicSuffixList& psl() {
  static const PublicSuffixList p = PublicSuffixList::from_file(MALWEB_FIXTURES_DIR "/psl_small.dat");
  return p;
}

JsStats js(const std::string& code) { return js_stats(code, lists().suspicious, lists().browser, lists().dom); }

}  // namespace

TEST_CASE("robots.txt examples") {
  const std::string body =
      "User-agent: *\n# note\nDisallow: /admin\nDisallow: /\nAllow: /pub\nSitemap: https://x/s.xml\n";
  const RobotsStats r = parse_robots_txt(body);
  CHECK(r.exists);
  CHECK(r.user_agent_count == 1);
  CHECK(r.comment_count == 1);
  CHECK(r.disallow_count == 2);
  CHECK(r.allow_count == 1);
  CHECK(r.sitemap_count == 1);
  CHECK(r.disallows_root);

  const RobotsStats none = parse_robots_txt(std::nullopt);
  CHECK(none == RobotsStats{});

  CHECK_FALSE(parse_robots_txt(std::string("Disallow: /a")).disallows_root);
}

TEST_CASE("robots.txt ignores line-ending style") {
  const std::string lf = "User-agent: *\nDisallow: /\n# c\nSitemap: /s.xml\n";
  std::string crlf;
  for (char c : lf) crlf += c == '\n' ? std::string("\r\n") : std::string(1, c);
  CHECK(parse_robots_txt(lf) == parse_robots_txt(crlf));
}

TEST_CASE("js call examples") {
  const JsStats a = js("eval(atob(x)); document.write(y); foo();");
  CHECK(a.function_call_count == 4);
  CHECK(a.dom_call_count == 1);
  CHECK(a.browser_call_count == 0);
  // document.write is itself on the suspicious list, so 3 with the shipped defaults.
  CHECK(a.suspicious_call_count == 3);
  const JsStats narrow = js_stats("eval(atob(x)); document.write(y); foo();", {"eval", "atob"}, {}, {"document.write"});
  CHECK(narrow.suspicious_call_count == 2);
  CHECK(narrow.dom_call_count == 1);

  CHECK(js("") == JsStats{});

  const JsStats w = js_stats("window.open(u)", {}, {"window.open"}, {});
  CHECK(w.browser_call_count == 1);
  CHECK(w.function_call_count == 1);
}

TEST_CASE("js keywords and declarations are not calls") {
  const JsStats s = js("if (a) { while (b) {} } function f(x) { return (x); } for (;;) {}");
  CHECK(s.function_call_count == 0);
}

TEST_CASE("array literal statistics") {
  auto a = js_array_stats("var a=[1,2,3]; var b=[1];");
  CHECK(a.avg_array_length == doctest::Approx(2.0));
  CHECK(a.max_array_length == 3);
  a = js_array_stats("var x = 1;");
  CHECK(a.avg_array_length == 0.0);
  CHECK(a.max_array_length == 0);
  a = js_array_stats("[[1,2],[3]]");
  CHECK(a.avg_array_length == doctest::Approx(5.0 / 3.0));
  CHECK(a.max_array_length == 2);
  // Index expressions are not literals.
  CHECK(js_array_lengths("x[0] = y[i];").empty());
}

TEST_CASE("css examples") {
  const CssStats a = css_stats(".x{display:none} .y{color:red}", lists().hidden_css);
  CHECK(a.hidden_element_count == 1);
  CHECK(a.total_length == 30);
  CHECK(css_stats("", lists().hidden_css) == CssStats{});
  CHECK(css_stats(".a{visibility:hidden;opacity:0}", lists().hidden_css).hidden_element_count == 2);
  CHECK(normalize_css_declaration(" DISPLAY : None !important") == "display:none");
  CHECK(normalize_css_declaration("width: 0px") == "width:0");
}

TEST_CASE("page examples") {
  FetchedPage page;
  page.final_url = "https://example.com/";
  page.html =
      "<script>var a = 'http://a.test/x';</script><script src='https://example.com/s.js'></script>"
      "<p>http://a.test/x</p><img src=\"https://other.com/a.png\">";
  const ContentFeatures f = extract_content_features(page, lists(), psl());
  CHECK(f.script_tag_count == 2);
  CHECK(f.url_count == 4);
  CHECK(f.unique_url_count == 3);
  CHECK(f.out_of_domain_img_count == 1);
  CHECK(f.content_length == page.html.size());

  FetchedPage empty;
  empty.final_url = "http://example.com/";
  const ContentFeatures e = extract_content_features(empty, lists(), psl());
  CHECK(e.content_length == 0);
  CHECK(e.script_tag_count == 0);
  CHECK(e.url_count == 0);
  CHECK_FALSE(e.contains_hex);
}

TEST_CASE("external assets feed the external stats") {
  FetchedPage page;
  page.final_url = "http://example.com/";
  page.html = "<html></html>";
  page.external_js.push_back({"http://example.com/a.js", "eval(x); var q = [1,2];"});
  page.external_css.push_back({"http://example.com/a.css", ".h{display:none}"});
  const ContentFeatures f = extract_content_features(page, lists(), psl());
  CHECK(f.js.function_call_count == 0);
  CHECK(f.js_external.suspicious_call_count == 1);
  CHECK(f.js_external.max_array_length == 2);
  CHECK(f.css_external.hidden_element_count == 1);
  CHECK(f.css.hidden_element_count == 0);
}

TEST_CASE("event handlers only count when enabled") {
  FetchedPage page;
  page.final_url = "http://example.com/";
  page.html = "<a onclick=\"eval(x)\">x</a>";
  ScanLists l = lists();
  CHECK(extract_content_features(page, l, psl()).js.suspicious_call_count == 0);
  l.include_event_handlers = true;
  CHECK(extract_content_features(page, l, psl()).js.suspicious_call_count == 1);
}

TEST_CASE("hex runs") {
  CHECK_FALSE(scan_hex("<p>abc123</p>", 16).contains_hex);
  const HexScan h = scan_hex("<p>0123456789abcdef0</p>", 16);
  CHECK(h.contains_hex);
  CHECK(h.hex_length == 17);
}

TEST_CASE("scan lists round-trip through json") {
  ScanLists l = ScanLists::defaults();
  l.hex_run_threshold = 24;
  l.include_event_handlers = true;
  const ScanLists back = ScanLists::from_json_text(l.to_json_text());
  CHECK(back.suspicious == l.suspicious);
  CHECK(back.hidden_css == l.hidden_css);
  CHECK(back.hex_run_threshold == 24);
  CHECK(back.include_event_handlers);
}

TEST_CASE("content properties on random pages") {
  std::mt19937_64 rng(8);
  const std::vector<std::string> pieces = {
      "<script>",  "</script>", "eval(", ")",          "document.write(1);", "[1,2]", "http://a.test/",
      "https://b.test/x", "<img src='https://c.test/i.png'>", "deadbeefdeadbeef", "<style>", "</style>",
      ".x{display:none}", "window.open()", " ", ";", "\n"};
  for (int i = 0; i < 200; ++i) {
    FetchedPage page;
    page.final_url = "https://example.com/";
    const std::size_t n = rng() % 40;
    for (std::size_t k = 0; k < n; ++k) page.html += pieces[rng() % pieces.size()];
    const ContentFeatures f = extract_content_features(page, lists(), psl());
    CHECK(f.unique_url_count <= f.url_count);
    CHECK((f.hex_length == 0) == !f.contains_hex);
    if (f.contains_hex) CHECK(f.hex_length >= lists().hex_run_threshold);
    CHECK(f == extract_content_features(page, lists(), psl()));
    CHECK(f.js.suspicious_call_count <= f.js.function_call_count);
    CHECK(f.js.avg_array_length <= static_cast<double>(f.js.max_array_length));
  }
}

TEST_CASE("js counts never drop when code is appended") {
  std::mt19937_64 rng(21);
  const std::vector<std::string> pieces = {"eval(a);", "x.y(", ")", "document.getElementById('q');", "[1,", "]",
                                           "'", "\"", "//", "\n", "/*", "*/", "window.open();", "foo();"};
  for (int i = 0; i < 300; ++i) {
    std::string code;
    for (std::size_t k = rng() % 10; k > 0; --k) code += pieces[rng() % pieces.size()];
    // Appending a complete statement after a newline and a closed comment.
    const std::string more = "\n*/;eval(z); document.write(1); window.alert(2);";
    const JsStats a = js(code);
    const JsStats b = js(code + more);
    CHECK(b.total_length >= a.total_length);
    CHECK(b.function_call_count >= a.function_call_count);
    CHECK(b.suspicious_call_count >= a.suspicious_call_count);
    CHECK(b.browser_call_count >= a.browser_call_count);
    CHECK(b.dom_call_count >= a.dom_call_count);
  }
}
