#include "malweb/url_lexical.hpp"

#include <array>
#include <cmath>

#include "malweb/error.hpp"
#include "malweb/text.hpp"

namespace malweb {

namespace {

std::string normalize_rule(std::string_view rule) {
  rule = text::trim(rule);
  while (!rule.empty() && rule.front() == '.') rule.remove_prefix(1);
  while (!rule.empty() && rule.back() == '.') rule.remove_suffix(1);
  return text::to_lower(rule);
}

// Positions of label starts, from the full host down to its last label.
std::vector<std::size_t> label_starts(std::string_view host) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < host.size(); ++i)
    if (host[i] == '.') starts.push_back(i + 1);
  return starts;
}

bool is_scheme_char(char c) {
  return text::is_alpha(c) || text::is_digit(c) || c == '+' || c == '-' || c == '.';
}

bool valid_host_char(char c) {
  if (static_cast<unsigned char>(c) >= 0x80) return true;  // raw IDN bytes pass through
  return text::is_alpha(c) || text::is_digit(c) || c == '-' || c == '_' || c == '.' || c == '*' ||
         c == '~' || c == '!' || c == '$' || c == '\'' || c == '+';
}

}  // namespace

PublicSuffixList PublicSuffixList::from_text(std::string_view body) {
  PublicSuffixList list;
  for (auto line : text::split(body, '\n')) {
    line = text::trim(line);
    if (line.empty() || line.substr(0, 2) == "//") continue;
    // Rules end at the first whitespace.
    const auto ws = line.find_first_of(" \t");
    if (ws != std::string_view::npos) line = line.substr(0, ws);
    list.add_rule(line);
  }
  return list;
}

PublicSuffixList PublicSuffixList::from_file(const std::string& path) {
  return from_text(text::read_file(path));
}

void PublicSuffixList::add_rule(std::string_view rule) {
  rule = text::trim(rule);
  if (rule.empty()) return;
  if (rule.front() == '!') {
    exceptions_.insert(normalize_rule(rule.substr(1)));
  } else if (rule.substr(0, 2) == "*.") {
    wildcards_.insert(normalize_rule(rule.substr(2)));
  } else {
    auto r = normalize_rule(rule);
    if (r.find('.') == std::string::npos) tlds_.insert(r);
    rules_.insert(std::move(r));
  }
}

std::string PublicSuffixList::suffix_of(std::string_view host) const {
  const auto starts = label_starts(host);
  // Walk candidates from longest to shortest; the first hit is the longest match.
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::string_view candidate = host.substr(starts[i]);
    if (exceptions_.count(std::string(candidate))) {
      // An exception rule makes its parent the suffix.
      return i + 1 < starts.size() ? std::string(host.substr(starts[i + 1])) : std::string();
    }
    if (rules_.count(std::string(candidate))) return std::string(candidate);
    if (i + 1 < starts.size() && wildcards_.count(std::string(host.substr(starts[i + 1]))))
      return std::string(candidate);
  }
  return {};
}

bool PublicSuffixList::is_suffix(std::string_view candidate) const {
  return !candidate.empty() && suffix_of(candidate) == candidate;
}

bool PublicSuffixList::is_tld(std::string_view label) const {
  return tlds_.count(text::to_lower(label)) > 0;
}

std::string UrlParts::registered_domain() const {
  if (suffix.empty()) return second_level_domain;
  if (second_level_domain.empty()) return suffix;
  return second_level_domain + "." + suffix;
}

bool is_ipv4_literal(std::string_view host) {
  const auto parts = text::split(host, '.');
  if (parts.size() != 4) return false;
  for (auto p : parts) {
    if (p.empty() || p.size() > 3) return false;
    int v = 0;
    for (char c : p) {
      if (!text::is_digit(c)) return false;
      v = v * 10 + (c - '0');
    }
    if (v > 255) return false;
  }
  return true;
}

bool contains_ipv4(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (!text::is_digit(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (text::is_digit(s[j]) || s[j] == '.')) ++j;
    const auto parts = text::split(s.substr(i, j - i), '.');
    for (std::size_t k = 0; k + 4 <= parts.size(); ++k) {
      bool ok = true;
      for (std::size_t m = k; m < k + 4 && ok; ++m) {
        const auto p = parts[m];
        if (p.empty() || p.size() > 3) {
          ok = false;
          break;
        }
        int v = 0;
        for (char c : p) v = v * 10 + (c - '0');
        ok = v <= 255;
      }
      if (ok) return true;
    }
    i = j;
  }
  return false;
}

UrlParts parse_url(std::string_view url, const PublicSuffixList& suffixes) {
  const std::string original(url);
  url = text::trim(url);
  if (url.empty()) throw UnparsableUrl(original);

  UrlParts parts;
  std::string_view rest = url;

  const auto sep = rest.find("://");
  if (sep != std::string_view::npos && sep > 0 && text::is_alpha(rest[0])) {
    bool scheme_ok = true;
    for (std::size_t i = 0; i < sep; ++i) scheme_ok = scheme_ok && is_scheme_char(rest[i]);
    if (scheme_ok) {
      parts.scheme = text::to_lower(rest.substr(0, sep));
      rest.remove_prefix(sep + 3);
    }
  } else if (rest.substr(0, 2) == "//") {
    rest.remove_prefix(2);
  }

  const auto auth_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, auth_end);
  std::string_view tail = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);

  if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);

  std::string_view host = authority;
  if (!host.empty() && host.front() == '[') {
    const auto close = host.find(']');
    if (close == std::string_view::npos) throw UnparsableUrl(original);
    parts.hostname = text::to_lower(host.substr(1, close - 1));
    if (parts.hostname.empty()) throw UnparsableUrl(original);
    parts.is_ip_host = true;
    parts.second_level_domain = parts.hostname;
  } else {
    if (const auto colon = host.rfind(':'); colon != std::string_view::npos) {
      for (std::size_t i = colon + 1; i < host.size(); ++i)
        if (!text::is_digit(host[i])) throw UnparsableUrl(original);
      host = host.substr(0, colon);
    }
    while (!host.empty() && host.back() == '.') host.remove_suffix(1);
    if (host.empty()) throw UnparsableUrl(original);
    for (char c : host)
      if (!valid_host_char(c)) throw UnparsableUrl(original);
    parts.hostname = text::to_lower(host);

    if (is_ipv4_literal(parts.hostname)) {
      parts.is_ip_host = true;
      parts.second_level_domain = parts.hostname;
    } else {
      for (auto label : text::split(parts.hostname, '.'))
        if (label.empty()) throw UnparsableUrl(original);
      parts.suffix = suffixes.suffix_of(parts.hostname);
      std::string_view registrable = parts.hostname;
      if (!parts.suffix.empty()) {
        registrable = parts.suffix.size() == parts.hostname.size()
                          ? std::string_view{}
                          : registrable.substr(0, registrable.size() - parts.suffix.size() - 1);
      }
      if (!registrable.empty()) {
        auto labels = text::split(registrable, '.');
        parts.second_level_domain = std::string(labels.back());
        labels.pop_back();
        for (auto l : labels) parts.subdomains.emplace_back(l);
      }
    }
  }

  const auto hash = tail.find('#');
  if (hash != std::string_view::npos) tail = tail.substr(0, hash);
  const auto q = tail.find('?');
  parts.path = std::string(tail.substr(0, q));
  if (q != std::string_view::npos) parts.query = std::string(tail.substr(q + 1));
  return parts;
}

double shannon_entropy(std::string_view s) {
  if (s.empty()) return 0.0;
  std::array<std::size_t, 256> freq{};
  for (unsigned char c : s) ++freq[c];
  const double n = static_cast<double>(s.size());
  double h = 0.0;
  for (std::size_t f : freq) {
    if (f == 0) continue;
    const double p = static_cast<double>(f) / n;
    h -= p * std::log2(p);
  }
  return h;
}

std::size_t count_embedded_tlds(std::string_view url, const PublicSuffixList& suffixes) {
  const UrlParts parts = parse_url(url, suffixes);
  if (parts.is_ip_host) return 0;
  std::size_t n = 0;
  for (auto label : text::split(parts.hostname, '.'))
    if (suffixes.is_tld(label)) ++n;
  return n;
}

LexicalFeatures extract_lexical(std::string_view url, const PublicSuffixList& suffixes) {
  const UrlParts parts = parse_url(url, suffixes);
  LexicalFeatures f;

  f.url_length = url.size();
  std::array<bool, 256> seen{};
  std::size_t digits = 0;
  for (unsigned char c : url) {
    switch (c) {
      case '_': ++f.underscore_count; break;
      case ';': ++f.semicolon_count; break;
      case '0': ++f.zero_count; break;
      case ' ': ++f.space_count; break;
      case '-': ++f.hyphen_count; break;
      case '@': ++f.at_count; break;
      case '?': ++f.query_count; break;
      case '&': ++f.ampersand_count; break;
      case '=': ++f.equals_count; break;
      default: break;
    }
    if (text::is_digit(static_cast<char>(c))) ++digits;
    if (!seen[c]) {
      seen[c] = true;
      ++f.unique_chars;
      if (text::is_digit(static_cast<char>(c))) ++f.unique_digits;
      if (text::is_alpha(static_cast<char>(c))) ++f.unique_letters;
    }
  }
  f.subdomain_count = parts.subdomains.size();
  f.hostname_length = parts.hostname.size();

  auto digit_count = [](std::string_view s) {
    std::size_t n = 0;
    for (char c : s) n += text::is_digit(c) ? 1 : 0;
    return n;
  };
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };

  f.digits_to_url_ratio = ratio(digits, f.url_length);
  f.digits_to_hostname_ratio = ratio(digit_count(parts.hostname), parts.hostname.size());
  f.digits_to_domain_ratio = ratio(digit_count(parts.second_level_domain), parts.second_level_domain.size());
  f.ip_in_url = parts.is_ip_host || contains_ipv4(url);
  f.at_in_url = f.at_count > 0;
  f.domain_length = parts.second_level_domain.size();
  f.letters_to_chars_ratio = ratio(f.unique_letters, f.unique_chars);
  f.numbers_to_chars_ratio = ratio(digits, f.unique_chars);
  f.tld = parts.suffix;
  f.domain_entropy = shannon_entropy(parts.second_level_domain);
  f.tld_count_in_url = count_embedded_tlds(url, suffixes);
  f.url_entropy = shannon_entropy(url);
  return f;
}

}  // namespace malweb
