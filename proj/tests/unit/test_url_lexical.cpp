#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "malweb/error.hpp"
#include "malweb/url_lexical.hpp"
#include "oracles.hpp"

using namespace malweb;

namespace {

const PublicSuffixList& psl() {
  static const PublicSuffixList p = PublicSuffixList::from_file(MALWEB_FIXTURES_DIR "/psl_small.dat");
  return p;
}

std::string join_host(const UrlParts& p) {
  std::string out;
  for (const auto& s : p.subdomains) out += s + ".";
  out += p.second_level_domain;
  if (!p.suffix.empty()) out += "." + p.suffix;
  return out;
}

std::vector<std::string> fixture_urls() {
  std::ifstream in(MALWEB_FIXTURES_DIR "/lexical_urls.json");
  std::vector<std::string> out;
  for (const auto& e : nlohmann::json::parse(in)) out.push_back(e["url"]);
  return out;
}

std::string random_url(std::mt19937_64& rng) {
  static const std::string alphabet = "abcxyz0129-_.@?&=; /:%ABC";
  static const std::vector<std::string> labels = {"com", "net", "org", "co", "uk", "io", "shop", "a1", "x-y", "192",
                                                  "168", "0", "1", "paypal", "secure"};
  std::string host;
  const std::size_t n = 1 + rng() % 5;
  for (std::size_t i = 0; i < n; ++i) host += (i ? "." : "") + labels[rng() % labels.size()];
  std::string tail;
  const std::size_t m = rng() % 30;
  for (std::size_t i = 0; i < m; ++i) tail += alphabet[rng() % alphabet.size()];
  return (rng() % 2 ? "http://" : "https://") + host + "/" + tail;
}

}  // namespace

TEST_CASE("parse_url examples") {
  auto p = parse_url("http://a.b.example.co.uk/p?q=1", psl());
  CHECK(p.subdomains == std::vector<std::string>{"a", "b"});
  CHECK(p.second_level_domain == "example");
  CHECK(p.suffix == "co.uk");
  CHECK(p.path == "/p");
  CHECK(p.query == "q=1");
  CHECK(p.registered_domain() == "example.co.uk");

  p = parse_url("http://192.168.0.1/x", psl());
  CHECK(p.is_ip_host);
  CHECK(p.hostname == "192.168.0.1");
  CHECK(p.subdomains.empty());
  CHECK(p.suffix.empty());

  p = parse_url("example.com", psl());
  CHECK(p.scheme.empty());
  CHECK(p.second_level_domain == "example");
  CHECK(p.suffix == "com");
}

TEST_CASE("parse_url rejects input without a host") {
  CHECK_THROWS_AS(parse_url("", psl()), UnparsableUrl);
  CHECK_THROWS_AS(parse_url("   ", psl()), UnparsableUrl);
  CHECK_THROWS_AS(parse_url("http:///path", psl()), UnparsableUrl);
}

TEST_CASE("public suffix rules: wildcard and exception") {
  auto list = PublicSuffixList::from_text("// comment\ncom\n*.ck\n!www.ck\n");
  CHECK(list.suffix_of("a.b.com") == "com");
  CHECK(list.suffix_of("shop.foo.ck") == "foo.ck");
  CHECK(list.suffix_of("www.ck") == "ck");
  CHECK(list.suffix_of("example.zz").empty());
  CHECK(list.is_tld("com"));
  CHECK_FALSE(list.is_tld("co.uk"));
}

TEST_CASE("hostname reassembles from its parts") {
  for (const auto& url : fixture_urls()) {
    const UrlParts p = parse_url(url, psl());
    if (p.is_ip_host) continue;
    CHECK_MESSAGE(join_host(p) == p.hostname, url);
    CHECK((p.suffix.empty() || psl().is_suffix(p.suffix)));
  }
}

TEST_CASE("shannon entropy examples and bounds") {
  CHECK(shannon_entropy("aaaa") == doctest::Approx(0.0));
  CHECK(shannon_entropy("ab") == doctest::Approx(1.0));
  CHECK(shannon_entropy("abab cd") == doctest::Approx(2.2359).epsilon(1e-4));
  CHECK(shannon_entropy("") == 0.0);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    std::string s = random_url(rng);
    const double h = shannon_entropy(s);
    std::set<char> distinct(s.begin(), s.end());
    CHECK(h >= 0.0);
    CHECK(h <= std::log2(static_cast<double>(distinct.size())) + 1e-12);
    std::shuffle(s.begin(), s.end(), rng);
    CHECK(shannon_entropy(s) == doctest::Approx(h).epsilon(1e-12));
    CHECK(h == doctest::Approx(testing::entropy_oracle(s)).epsilon(1e-12));
  }
}

TEST_CASE("embedded TLD counts") {
  CHECK(count_embedded_tlds("http://com.net.example.org/", psl()) == 3);
  CHECK(count_embedded_tlds("http://example.org/", psl()) == 1);
  CHECK(count_embedded_tlds("http://abcxyz.test123.example.org/", psl()) == 1);
}

TEST_CASE("extract_lexical examples") {
  auto f = extract_lexical("https://ex.com/?a=1&b=2", psl());
  CHECK(f.equals_count == 2);
  CHECK(f.ampersand_count == 1);
  CHECK(f.query_count == 1);
  CHECK(f.zero_count == 0);

  f = extract_lexical("http://user@ex.com", psl());
  CHECK(f.at_count == 1);
  CHECK(f.at_in_url);

  f = extract_lexical("http://abc.com", psl());
  CHECK(f.digits_to_domain_ratio == 0.0);
  CHECK(f.domain_entropy == doctest::Approx(std::log2(3.0)));
  CHECK(f.tld == "com");
}

TEST_CASE("ipv4 detection") {
  CHECK(contains_ipv4("http://10.0.0.1/a"));
  CHECK(contains_ipv4("http://ex.com/?next=8.8.8.8"));
  CHECK_FALSE(contains_ipv4("http://ex.com/v1.2.3"));
  CHECK_FALSE(contains_ipv4("http://999.1.1.1/"));
  CHECK_FALSE(contains_ipv4("1.2.3.4567"));
  CHECK(is_ipv4_literal("127.0.0.1"));
  CHECK_FALSE(is_ipv4_literal("127.0.0"));
}

TEST_CASE("lexical properties on random urls") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const std::string url = random_url(rng);
    LexicalFeatures f;
    try {
      f = extract_lexical(url, psl());
    } catch (const UnparsableUrl&) {
      continue;
    }
    const UrlParts p = parse_url(url, psl());
    CHECK(f.at_in_url == (f.at_count >= 1));
    CHECK(f.ip_in_url == (p.is_ip_host || testing::ipv4_substring_oracle(url)));
    std::size_t digits = 0;
    for (char c : url) digits += (c >= '0' && c <= '9');
    CHECK(std::llround(f.digits_to_url_ratio * static_cast<double>(f.url_length)) == static_cast<long long>(digits));
    for (double r : {f.digits_to_url_ratio, f.digits_to_hostname_ratio, f.digits_to_domain_ratio,
                     f.letters_to_chars_ratio}) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
    CHECK(f.numbers_to_chars_ratio >= 0.0);
    const LexicalFeatures again = extract_lexical(url, psl());
    CHECK(again.url_entropy == f.url_entropy);
    CHECK(again.tld == f.tld);
  }
}
