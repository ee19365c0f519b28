#pragma once

// URL decomposition against a public-suffix table, and the lexical feature
// family computed from the raw URL string.

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace malweb {

/// Public-suffix rules in the publicsuffix.org text format: one rule per
/// line, "//" comments, optional "*." wildcard and "!" exception rules.
class PublicSuffixList {
 public:
  PublicSuffixList() = default;

  static PublicSuffixList from_text(std::string_view body);
  static PublicSuffixList from_file(const std::string& path);

  void add_rule(std::string_view rule);

  /// Longest matching public suffix of `host` (lowercase, no trailing dot),
  /// or empty when no rule matches.
  std::string suffix_of(std::string_view host) const;

  bool is_suffix(std::string_view candidate) const;
  /// True for single-label rules ("com", "org", "uk"...).
  bool is_tld(std::string_view label) const;

  std::size_t size() const noexcept { return rules_.size() + wildcards_.size() + exceptions_.size(); }

 private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // stored without the "*." prefix
  std::unordered_set<std::string> exceptions_;  // stored without the "!" prefix
  std::unordered_set<std::string> tlds_;
};

struct UrlParts {
  std::string scheme;
  std::vector<std::string> subdomains;
  std::string second_level_domain;
  std::string suffix;
  std::string hostname;
  std::string path;
  std::string query;
  bool is_ip_host = false;

  /// second_level_domain + "." + suffix, or the bare label when there is no suffix.
  std::string registered_domain() const;
};

/// Throws UnparsableUrl when no hostname can be isolated.
UrlParts parse_url(std::string_view url, const PublicSuffixList& suffixes);

bool is_ipv4_literal(std::string_view host);
/// True if a dotted-quad IPv4 address appears anywhere in `s`.
bool contains_ipv4(std::string_view s);

/// Shannon entropy in bits over byte frequencies. Empty input yields 0.
double shannon_entropy(std::string_view s);

/// Number of hostname labels that are themselves a known top-level domain.
std::size_t count_embedded_tlds(std::string_view url, const PublicSuffixList& suffixes);

struct LexicalFeatures {
  std::size_t url_length = 0;
  std::size_t underscore_count = 0;
  std::size_t semicolon_count = 0;
  std::size_t subdomain_count = 0;
  std::size_t zero_count = 0;
  std::size_t space_count = 0;
  std::size_t hyphen_count = 0;
  std::size_t at_count = 0;
  std::size_t query_count = 0;
  std::size_t ampersand_count = 0;
  std::size_t equals_count = 0;
  std::size_t hostname_length = 0;
  double digits_to_url_ratio = 0.0;
  double digits_to_hostname_ratio = 0.0;
  double digits_to_domain_ratio = 0.0;
  bool ip_in_url = false;
  bool at_in_url = false;
  std::size_t domain_length = 0;
  std::size_t unique_chars = 0;
  std::size_t unique_digits = 0;
  std::size_t unique_letters = 0;
  double letters_to_chars_ratio = 0.0;
  // Total digit occurrences over the unique character count; may exceed 1.
  double numbers_to_chars_ratio = 0.0;
  std::string tld;
  double domain_entropy = 0.0;
  std::size_t tld_count_in_url = 0;
  double url_entropy = 0.0;
};

LexicalFeatures extract_lexical(std::string_view url, const PublicSuffixList& suffixes);

}  // namespace malweb
