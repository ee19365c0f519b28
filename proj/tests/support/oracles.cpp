#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>
#include <set>

namespace malweb::testing {

double entropy_oracle(const std::string& s) {
  if (s.empty()) return 0.0;
  std::map<char, int> freq;
  for (char c : s) freq[c]++;
  double h = 0.0;
  for (const auto& [c, k] : freq) {
    const double p = static_cast<double>(k) / static_cast<double>(s.size());
    h -= p * std::log(p) / std::log(2.0);
  }
  return h;
}

bool ipv4_substring_oracle(const std::string& s) {
  static const std::regex quad(R"((\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})(?!\d))");
  // Only at digit-run starts, so an octet is never the tail of a longer number.
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) continue;
    if (i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]))) continue;
    std::smatch m;
    const std::string tail = s.substr(i);
    if (!std::regex_search(tail, m, quad, std::regex_constants::match_continuous)) continue;
    bool ok = true;
    for (int g = 1; g <= 4; ++g) ok = ok && std::stoi(m[g].str()) <= 255;
    if (ok) return true;
  }
  return false;
}

LexicalFeatures lexical_oracle(const std::string& url, const HandParts& parts) {
  LexicalFeatures f;
  auto count = [&](char c) { return static_cast<std::size_t>(std::count(url.begin(), url.end(), c)); };
  auto digits_in = [](const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += (c >= '0' && c <= '9');
    return n;
  };
  auto frac = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };

  f.url_length = url.size();
  f.underscore_count = count('_');
  f.semicolon_count = count(';');
  f.subdomain_count = parts.subdomains.size();
  f.zero_count = count('0');
  f.space_count = count(' ');
  f.hyphen_count = count('-');
  f.at_count = count('@');
  f.query_count = count('?');
  f.ampersand_count = count('&');
  f.equals_count = count('=');
  f.hostname_length = parts.hostname.size();
  f.digits_to_url_ratio = frac(digits_in(url), url.size());
  f.digits_to_hostname_ratio = frac(digits_in(parts.hostname), parts.hostname.size());
  f.digits_to_domain_ratio = frac(digits_in(parts.sld), parts.sld.size());
  f.ip_in_url = parts.is_ip || ipv4_substring_oracle(url);
  f.at_in_url = f.at_count >= 1;
  f.domain_length = parts.sld.size();
  std::set<char> all, digits, letters;
  for (char c : url) {
    all.insert(c);
    if (c >= '0' && c <= '9') digits.insert(c);
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) letters.insert(c);
  }
  f.unique_chars = all.size();
  f.unique_digits = digits.size();
  f.unique_letters = letters.size();
  f.letters_to_chars_ratio = frac(letters.size(), all.size());
  f.numbers_to_chars_ratio = frac(digits_in(url), all.size());
  f.tld = parts.suffix;
  f.domain_entropy = entropy_oracle(parts.sld);
  f.tld_count_in_url = parts.tld_count;
  f.url_entropy = entropy_oracle(url);
  return f;
}

PdnsFeatures pdns_oracle(const std::vector<PassiveDnsRecord>& records, const AsnSet& suspicious,
                         const AsnSet& false_positive) {
  PdnsFeatures f;
  f.history_length = records.size();
  // A value counts once, at its first non-blank occurrence.
  auto distinct = [&](auto field) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::string& v = field(records[i]);
      if (v.empty()) continue;
      bool earlier = false;
      for (std::size_t j = 0; j < i; ++j) earlier = earlier || field(records[j]) == v;
      n += !earlier;
    }
    return n;
  };
  f.unique_ips = distinct([](const PassiveDnsRecord& r) -> const std::string& { return r.ip; });
  f.unique_hostnames = distinct([](const PassiveDnsRecord& r) -> const std::string& { return r.hostname; });
  f.country_count = distinct([](const PassiveDnsRecord& r) -> const std::string& { return r.country; });
  for (const auto& r : records) {
    for (const auto& a : suspicious) f.suspicious_asn_count += (a == r.asn);
    for (const auto& a : false_positive) f.false_positive_asn_count += (a == r.asn);
  }

  // Insertion sort by (first_seen, last_seen, asn).
  std::vector<PassiveDnsRecord> v = records;
  auto before = [](const PassiveDnsRecord& a, const PassiveDnsRecord& b) {
    if (a.first_seen != b.first_seen) return a.first_seen < b.first_seen;
    if (a.last_seen != b.last_seen) return a.last_seen < b.last_seen;
    return a.asn < b.asn;
  };
  for (std::size_t i = 1; i < v.size(); ++i)
    for (std::size_t j = i; j > 0 && before(v[j], v[j - 1]); --j) std::swap(v[j], v[j - 1]);
  for (std::size_t i = 1; i < v.size(); ++i) f.asn_switch_count += (v[i].asn != v[i - 1].asn);
  return f;
}

Split exhaustive_tree_split(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) {
  auto gini_weighted = [&](const std::vector<double>& c) {
    double n = 0.0, sq = 0.0;
    for (double v : c) n += v;
    if (n == 0.0) return 0.0;
    for (double v : c) sq += (v / n) * (v / n);
    return n * (1.0 - sq);
  };
  std::vector<double> total(n_classes, 0.0);
  for (int c : y) total[static_cast<std::size_t>(c)] += 1.0;
  const double parent = gini_weighted(total);

  Split best;
  bool found = false;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::set<double> vals;
    for (std::size_t i = 0; i < x.rows(); ++i) vals.insert(x(i, f));
    for (auto it = vals.begin(); std::next(it) != vals.end(); ++it) {
      const double t = (*it + *std::next(it)) / 2.0;
      std::vector<double> l(n_classes, 0.0), r(n_classes, 0.0);
      for (std::size_t i = 0; i < x.rows(); ++i) (x(i, f) < t ? l : r)[static_cast<std::size_t>(y[i])] += 1.0;
      const double score = parent - gini_weighted(l) - gini_weighted(r);
      if (!found || score > best.score) {
        found = true;
        best = {static_cast<int>(f), t, score};
      }
    }
  }
  return found ? best : Split{};
}

std::vector<StumpOracle> exhaustive_gbt_stumps(const Matrix& x, const std::vector<int>& y, std::size_t n_classes,
                                               double lambda, double min_child_weight, double gamma,
                                               double learning_rate) {
  const std::size_t n = x.rows();
  const double p = 1.0 / static_cast<double>(n_classes);
  std::vector<StumpOracle> out(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    // Gradient statistics are stored in single precision.
    std::vector<double> g(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<float>(p - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0));
      h[i] = static_cast<float>(2.0 * p * (1.0 - p));
    }
    double gt = 0.0, ht = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gt += g[i];
      ht += h[i];
    }
    auto score = [&](double a, double b) { return a * a / (b + lambda); };
    StumpOracle& best = out[c];
    best.left_value = best.right_value = -gt / (ht + lambda) * learning_rate;
    for (std::size_t f = 0; f < x.cols(); ++f) {
      std::set<double> vals;
      for (std::size_t i = 0; i < n; ++i) vals.insert(x(i, f));
      for (auto it = vals.begin(); std::next(it) != vals.end(); ++it) {
        const double t = (*it + *std::next(it)) / 2.0;
        double gl = 0.0, hl = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          if (x(i, f) < t) {
            gl += g[i];
            hl += h[i];
          }
        const double gr = gt - gl, hr = ht - hl;
        if (hl < min_child_weight || hr < min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(gt, ht));
        if (gain <= gamma || (best.feature >= 0 && gain <= best.gain)) continue;
        best.feature = static_cast<int>(f);
        best.threshold = t;
        best.gain = gain;
        best.left_value = -gl / (hl + lambda) * learning_rate;
        best.right_value = -gr / (hr + lambda) * learning_rate;
      }
    }
  }
  return out;
}

}  // namespace malweb::testing
