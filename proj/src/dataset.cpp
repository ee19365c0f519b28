#include "malweb/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <limits>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "malweb/csv.hpp"
#include "malweb/error.hpp"
#include "malweb/text.hpp"

namespace malweb {

std::string_view cascade_name(Cascade c) {
  switch (c) {
    case Cascade::Base: return "base";
    case Cascade::C1: return "c1";
    case Cascade::C2: return "c2";
    case Cascade::C3: return "c3";
    case Cascade::HostAll: return "all";
    case Cascade::Embedding: return "embedding";
  }
  return "?";
}

std::optional<Cascade> parse_cascade(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "base") return Cascade::Base;
  if (v == "c1") return Cascade::C1;
  if (v == "c2") return Cascade::C2;
  if (v == "c3") return Cascade::C3;
  if (v == "all") return Cascade::HostAll;
  return std::nullopt;
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  std::vector<std::string> seen;
  for (const auto& f : features_) seen.push_back(f.name);
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw InvalidArgument("feature schema: duplicate feature names");
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

const FeatureSchema& schema() {
  using K = FeatureKind;
  static const FeatureSchema s([] {
    std::vector<FeatureSpec> f;
    auto add = [&](Cascade c, const char* name, K kind, const char* title) {
      f.push_back(FeatureSpec{name, c, kind, title});
    };
    const auto B = Cascade::Base;
    add(B, "url_length", K::Numeric, "Length of the URL");
    add(B, "underscore_count", K::Numeric, "Number of underscores in the URL");
    add(B, "semicolon_count", K::Numeric, "Number of semicolons in the URL");
    add(B, "subdomain_count", K::Numeric, "Number of subdomains");
    add(B, "zero_count", K::Numeric, "Number of zeros in the URL");
    add(B, "space_count", K::Numeric, "Number of spaces in the URL");
    add(B, "hyphen_count", K::Numeric, "Number of hyphens in the URL");
    add(B, "at_count", K::Numeric, "Number of @ symbols in the URL");
    add(B, "query_count", K::Numeric, "Number of queries in the URL");
    add(B, "ampersand_count", K::Numeric, "Number of ampersands in the URL");
    add(B, "equals_count", K::Numeric, "Number of equal signs in the URL");
    add(B, "hostname_length", K::Numeric, "Hostname length");
    add(B, "digits_to_url_ratio", K::Numeric, "Ratio of digits to characters in the URL");
    add(B, "digits_to_hostname_ratio", K::Numeric, "Ratio of digits to hostname");
    add(B, "digits_to_domain_ratio", K::Numeric, "Ratio of digits to domain");
    add(B, "ip_in_url", K::Boolean, "IP address in URL");
    add(B, "at_in_url", K::Boolean, "Existence of @ symbol in URL");
    add(B, "domain_length", K::Numeric, "Domain length");
    add(B, "unique_chars", K::Numeric, "Unique URL characters");
    add(B, "unique_digits", K::Numeric, "Unique URL numbers");
    add(B, "unique_letters", K::Numeric, "Unique URL letters");
    add(B, "letters_to_chars_ratio", K::Numeric, "Ratio of letters to characters in the URL");
    add(B, "numbers_to_chars_ratio", K::Numeric, "Ratio of numbers to characters in the URL");
    add(B, "tld", K::Categorical, "Top-level domain");
    add(B, "domain_entropy", K::Numeric, "Domain entropy");
    add(B, "tld_count_in_url", K::Numeric, "Number of top-level domains in the URL");
    add(B, "url_entropy", K::Numeric, "URL entropy");

    const auto R = Cascade::C1;
    add(R, "robots_exists", K::Boolean, "Existence of a robots.txt file");
    add(R, "robots_length", K::Numeric, "Length of the robots.txt file");
    add(R, "robots_disallow_count", K::Numeric, "Disallow rule count");
    add(R, "robots_allow_count", K::Numeric, "Allow rule count");
    add(R, "robots_user_agent_count", K::Numeric, "User agent count");
    add(R, "robots_comment_count", K::Numeric, "Comment count");
    add(R, "robots_sitemap_count", K::Numeric, "Sitemap count");
    add(R, "robots_disallows_root", K::Boolean, "Whether the robots.txt file disallows the root");

    const auto C = Cascade::C2;
    add(C, "js_length", K::Numeric, "JavaScript length");
    add(C, "url_count", K::Numeric, "Number of URLs in the HTML");
    add(C, "unique_url_count", K::Numeric, "Unique URL count in the HTML");
    add(C, "js_suspicious_count", K::Numeric, "Suspicious JS function count");
    add(C, "js_function_count", K::Numeric, "JavaScript function count");
    add(C, "js_browser_call_count", K::Numeric, "Browser function calls in the JavaScript code");
    add(C, "js_dom_call_count", K::Numeric, "DOM function calls in the JavaScript code");
    add(C, "ext_js_browser_call_count", K::Numeric, "Browser function calls in external JavaScript files");
    add(C, "ext_js_dom_call_count", K::Numeric, "DOM function calls in external JavaScript files");
    add(C, "ext_js_length", K::Numeric, "External JavaScript length");
    add(C, "ext_js_function_count", K::Numeric, "Functions in the external JavaScript files");
    add(C, "ext_js_suspicious_count", K::Numeric, "Suspicious function calls in the external JavaScript files");
    add(C, "content_length", K::Numeric, "Content length");
    add(C, "script_tag_count", K::Numeric, "Script tag references");
    add(C, "contains_hex", K::Boolean, "Contains HEX");
    add(C, "hex_length", K::Numeric, "HEX length");
    add(C, "out_of_domain_img_count", K::Numeric, "Number of img sources in the HTML");
    add(C, "js_avg_array_length", K::Numeric, "Average length of JS arrays");
    add(C, "js_max_array_length", K::Numeric, "Maximum length of JS arrays");
    add(C, "ext_js_max_array_length", K::Numeric, "Maximum array length in external JavaScript files");
    add(C, "ext_js_avg_array_length", K::Numeric, "Average array length in external JavaScript files");
    add(C, "css_length", K::Numeric, "CSS length");
    add(C, "css_hidden_count", K::Numeric, "Number of hidden CSS elements");
    add(C, "ext_css_length", K::Numeric, "External CSS length");
    add(C, "ext_css_hidden_count", K::Numeric, "Number of hidden CSS elements in external CSS files");

    const auto P = Cascade::C3;
    add(P, "pdns_history_length", K::Numeric, "Passive DNS history length");
    add(P, "pdns_unique_ips", K::Numeric, "Unique IP addresses in the passive DNS");
    add(P, "pdns_unique_hostnames", K::Numeric, "Unique Hostnames Count");
    add(P, "pdns_country_count", K::Numeric, "Number of countries in the passive DNS");
    add(P, "pdns_suspicious_asn_count", K::Numeric, "Number of suspicious ASNs in the passive DNS");
    add(P, "pdns_false_positive_asn_count", K::Numeric, "Number of false positive ASNs in the passive DNS");
    add(P, "pdns_asn_switch_count", K::Numeric, "Number of ASN switches");

    const auto H = Cascade::HostAll;
    add(H, "country", K::Categorical, "Geographic location");
    add(H, "whois_complete", K::Boolean, "WHOIS information");
    add(H, "https", K::Boolean, "HTTPS");
    add(H, "tld_register_usd", K::Numeric, "Top-level domain register price");
    add(H, "tld_renew_usd", K::Numeric, "Top-level domain renew price");
    add(H, "tld_transfer_usd", K::Numeric, "Top-level domain transfer price");
    add(H, "tld_icann_fee_usd", K::Numeric, "Top-level domain ICANN fee");
    add(H, "registrar", K::Categorical, "Registrar");
    add(H, "ip_resolution_count", K::Numeric, "Number of IP addresses that resolve to the domain");
    return f;
  }());
  return s;
}

FeatureSchema cascade_subset(const FeatureSchema& s, Cascade level) {
  std::vector<FeatureSpec> out;
  for (const auto& f : s.features()) {
    const bool keep = level == Cascade::Embedding ||
                      (f.cascade != Cascade::Embedding && static_cast<int>(f.cascade) <= static_cast<int>(level));
    if (keep) out.push_back(f);
  }
  return FeatureSchema(std::move(out));
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

const std::unordered_map<std::string, std::size_t>& canonical_index() {
  static const auto index = [] {
    std::unordered_map<std::string, std::size_t> m;
    const auto& s = schema();
    for (std::size_t i = 0; i < s.size(); ++i) m.emplace(s[i].name, i);
    return m;
  }();
  return index;
}

class RowBuilder {
 public:
  RowBuilder() : row_{std::vector<double>(schema().size(), 0.0), {}, {}} {}

  void set(const char* name, double v) { row_.values[canonical_index().at(name)] = v; }
  void set(const char* name, bool v) { set(name, v ? 1.0 : 0.0); }
  void set(const char* name, std::size_t v) { set(name, static_cast<double>(v)); }
  void set_categorical(const char* name, std::string v) {
    const auto i = canonical_index().at(name);
    row_.values[i] = std::numeric_limits<double>::quiet_NaN();
    row_.categorical[i] = std::move(v);
  }
  void warn(std::string w) { row_.warnings.push_back(std::move(w)); }
  ExtractedRow take() { return std::move(row_); }

 private:
  ExtractedRow row_;
};

}  // namespace

ExtractedRow extract_row(const LabeledSample& sample, const ExtractionResources& res) {
  RowBuilder b;

  std::string suffix;
  try {
    const LexicalFeatures l = extract_lexical(sample.url, res.suffixes);
    suffix = l.tld;
    b.set("url_length", l.url_length);
    b.set("underscore_count", l.underscore_count);
    b.set("semicolon_count", l.semicolon_count);
    b.set("subdomain_count", l.subdomain_count);
    b.set("zero_count", l.zero_count);
    b.set("space_count", l.space_count);
    b.set("hyphen_count", l.hyphen_count);
    b.set("at_count", l.at_count);
    b.set("query_count", l.query_count);
    b.set("ampersand_count", l.ampersand_count);
    b.set("equals_count", l.equals_count);
    b.set("hostname_length", l.hostname_length);
    b.set("digits_to_url_ratio", l.digits_to_url_ratio);
    b.set("digits_to_hostname_ratio", l.digits_to_hostname_ratio);
    b.set("digits_to_domain_ratio", l.digits_to_domain_ratio);
    b.set("ip_in_url", l.ip_in_url);
    b.set("at_in_url", l.at_in_url);
    b.set("domain_length", l.domain_length);
    b.set("unique_chars", l.unique_chars);
    b.set("unique_digits", l.unique_digits);
    b.set("unique_letters", l.unique_letters);
    b.set("letters_to_chars_ratio", l.letters_to_chars_ratio);
    b.set("numbers_to_chars_ratio", l.numbers_to_chars_ratio);
    b.set_categorical("tld", l.tld);
    b.set("domain_entropy", l.domain_entropy);
    b.set("tld_count_in_url", l.tld_count_in_url);
    b.set("url_entropy", l.url_entropy);
  } catch (const UnparsableUrl& e) {
    b.warn(e.what());
    b.set_categorical("tld", "");
  }

  const ContentFeatures c = extract_content_features(sample.page, res.lists, res.suffixes);
  b.set("robots_exists", c.robots.exists);
  b.set("robots_length", c.robots.length);
  b.set("robots_disallow_count", c.robots.disallow_count);
  b.set("robots_allow_count", c.robots.allow_count);
  b.set("robots_user_agent_count", c.robots.user_agent_count);
  b.set("robots_comment_count", c.robots.comment_count);
  b.set("robots_sitemap_count", c.robots.sitemap_count);
  b.set("robots_disallows_root", c.robots.disallows_root);

  b.set("js_length", c.js.total_length);
  b.set("url_count", c.url_count);
  b.set("unique_url_count", c.unique_url_count);
  b.set("js_suspicious_count", c.js.suspicious_call_count);
  b.set("js_function_count", c.js.function_call_count);
  b.set("js_browser_call_count", c.js.browser_call_count);
  b.set("js_dom_call_count", c.js.dom_call_count);
  b.set("ext_js_browser_call_count", c.js_external.browser_call_count);
  b.set("ext_js_dom_call_count", c.js_external.dom_call_count);
  b.set("ext_js_length", c.js_external.total_length);
  b.set("ext_js_function_count", c.js_external.function_call_count);
  b.set("ext_js_suspicious_count", c.js_external.suspicious_call_count);
  b.set("content_length", c.content_length);
  b.set("script_tag_count", c.script_tag_count);
  b.set("contains_hex", c.contains_hex);
  b.set("hex_length", c.hex_length);
  b.set("out_of_domain_img_count", c.out_of_domain_img_count);
  b.set("js_avg_array_length", c.js.avg_array_length);
  b.set("js_max_array_length", c.js.max_array_length);
  b.set("ext_js_max_array_length", c.js_external.max_array_length);
  b.set("ext_js_avg_array_length", c.js_external.avg_array_length);
  b.set("css_length", c.css.total_length);
  b.set("css_hidden_count", c.css.hidden_element_count);
  b.set("ext_css_length", c.css_external.total_length);
  b.set("ext_css_hidden_count", c.css_external.hidden_element_count);

  const PdnsFeatures p = pdns_features(sample.pdns_records, res.suspicious_asns, res.false_positive_asns);
  b.set("pdns_history_length", p.history_length);
  b.set("pdns_unique_ips", p.unique_ips);
  b.set("pdns_unique_hostnames", p.unique_hostnames);
  b.set("pdns_country_count", p.country_count);
  b.set("pdns_suspicious_asn_count", p.suspicious_asn_count);
  b.set("pdns_false_positive_asn_count", p.false_positive_asn_count);
  b.set("pdns_asn_switch_count", p.asn_switch_count);

  HostIntel intel = sample.host;
  intel.https = intel.https || sample.page.https;
  if (intel.tld.empty()) intel.tld = suffix;
  const HostFeatures h = extract_host_features(intel, res.pricing);
  b.set_categorical("country", h.country);
  b.set("whois_complete", h.whois_complete);
  b.set("https", h.https);
  b.set("tld_register_usd", h.price.register_usd);
  b.set("tld_renew_usd", h.price.renew_usd);
  b.set("tld_transfer_usd", h.price.transfer_usd);
  b.set("tld_icann_fee_usd", h.price.icann_fee_usd);
  b.set_categorical("registrar", h.registrar);
  b.set("ip_resolution_count", h.ip_resolution_count);
  for (const auto& w : h.warnings) b.warn(w);
  return b.take();
}

void FrequencyEncoder::fit(const std::vector<std::string>& values) {
  table_.clear();
  if (values.empty()) return;
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& v : values) ++counts[v];
  for (const auto& [v, n] : counts) table_[v] = static_cast<double>(n) / static_cast<double>(values.size());
}

double FrequencyEncoder::encode(std::string_view value) const {
  const auto it = table_.find(value);
  return it == table_.end() ? 0.0 : it->second;
}

FeatureMatrix assemble(const std::vector<LabeledSample>& samples, const FeatureSchema& target,
                       const ExtractionResources& res, unsigned jobs) {
  if (samples.empty()) throw InvalidArgument("assemble: no samples");

  std::vector<ExtractedRow> rows(samples.size());
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) rows[i] = extract_row(samples[i], res);
  } else {
    // Strided partition; each worker writes only its own slots.
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < samples.size(); i += jobs) rows[i] = extract_row(samples[i], res);
      }));
    }
    for (auto& f : workers) f.get();
  }

  const auto& canon = schema();
  std::vector<std::size_t> cols;
  for (const auto& spec : target.features()) {
    const auto idx = canon.index_of(spec.name);
    if (!idx) throw SchemaMismatch(text::join(canon.names(), ","), spec.name);
    cols.push_back(*idx);
  }

  FeatureMatrix out;
  out.schema = target;
  out.values = Matrix(samples.size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (canon[cols[c]].kind != FeatureKind::Categorical) continue;
    std::vector<std::string> raw;
    raw.reserve(rows.size());
    for (const auto& r : rows) raw.push_back(r.categorical.at(cols[c]));
    out.encoders[canon[cols[c]].name].fit(raw);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& spec = canon[cols[c]];
      out.values(i, c) = spec.kind == FeatureKind::Categorical
                             ? out.encoders.at(spec.name).encode(rows[i].categorical.at(cols[c]))
                             : rows[i].values[cols[c]];
    }
    out.labels.push_back(samples[i].label);
    out.urls.push_back(samples[i].url);
    for (const auto& w : rows[i].warnings) out.warnings.push_back(samples[i].url + ": " + w);
    for (const auto& w : samples[i].annotations) out.warnings.push_back(samples[i].url + ": " + w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

void write_csv(const FeatureMatrix& m, const std::string& path) {
  if (m.values.rows() != m.labels.size()) throw InvalidArgument("write_csv: row count != label count");
  std::string body;
  auto header = m.schema.names();
  header.emplace_back("label");
  body += csv::format_row(header);
  for (std::size_t i = 0; i < m.values.rows(); ++i) {
    csv::Row row;
    for (double v : m.values.row(i)) row.push_back(text::format_double(v));
    row.emplace_back(label_name(m.labels[i]));
    body += csv::format_row(row);
  }
  try {
    text::write_file_atomic(path, body);

    nlohmann::json meta;
    meta["schema_version"] = FeatureSchema::kVersion;
    meta["features"] = m.schema.names();
    nlohmann::json enc = nlohmann::json::object();
    for (const auto& [name, e] : m.encoders) {
      nlohmann::json t = nlohmann::json::object();
      for (const auto& [value, freq] : e.table()) t[value] = freq;
      enc[name] = t;
    }
    meta["encoders"] = enc;
    meta["urls"] = m.urls;
    meta["warnings"] = m.warnings;
    text::write_file_atomic(sidecar_path(path),
                            meta.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(e.what());
  }
}

namespace {

FeatureMatrix read_csv_impl(const std::string& path, const std::vector<std::string>* expected) {
  const auto rows = csv::parse(text::read_file(path));
  if (rows.empty()) throw ParseError("read_csv: empty file '" + path + "'");
  std::vector<std::string> header = rows[0];
  if (header.empty() || header.back() != "label")
    throw SchemaMismatch("...,label", text::join(header, ","));
  header.pop_back();

  FeatureSchema subset;
  if (expected) {
    if (header != *expected) throw SchemaMismatch(text::join(*expected, ","), text::join(header, ","));
    std::vector<FeatureSpec> specs;
    for (const auto& name : header) {
      const auto idx = schema().index_of(name);
      specs.push_back(idx ? schema()[*idx] : FeatureSpec{name, Cascade::Embedding, FeatureKind::Numeric, name});
    }
    subset = FeatureSchema(std::move(specs));
  } else {
    bool matched = false;
    for (Cascade c : {Cascade::Base, Cascade::C1, Cascade::C2, Cascade::C3, Cascade::HostAll}) {
      auto candidate = cascade_subset(schema(), c);
      if (candidate.names() == header) {
        subset = std::move(candidate);
        matched = true;
        break;
      }
    }
    if (!matched) throw SchemaMismatch("a cascade subset of schema " + std::string(FeatureSchema::kVersion),
                                       text::join(header, ","));
  }

  FeatureMatrix m;
  m.schema = subset;
  m.values = Matrix(rows.size() - 1, header.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != header.size() + 1)
      throw ParseError("read_csv: line " + std::to_string(i + 1) + " has " + std::to_string(r.size()) +
                       " fields, expected " + std::to_string(header.size() + 1));
    for (std::size_t c = 0; c < header.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(r[c].c_str(), &end);
      if (r[c].empty() || end != r[c].c_str() + r[c].size() || std::isnan(v))
        throw ParseError("read_csv: bad value '" + r[c] + "' on line " + std::to_string(i + 1));
      m.values(i - 1, c) = v;
    }
    const auto label = label_from_name(r.back());
    if (!label) throw ParseError("read_csv: unknown label '" + r.back() + "' on line " + std::to_string(i + 1));
    m.labels.push_back(*label);
  }

  const std::string meta_path = sidecar_path(path);
  if (std::filesystem::exists(meta_path)) {
    try {
      const auto meta = nlohmann::json::parse(text::read_file(meta_path));
      m.urls = meta.value("urls", std::vector<std::string>{});
      m.warnings = meta.value("warnings", std::vector<std::string>{});
      if (meta.contains("encoders")) {
        for (const auto& [name, t] : meta.at("encoders").items()) {
          std::map<std::string, double, std::less<>> table;
          for (const auto& [value, freq] : t.items()) table[value] = freq.get<double>();
          m.encoders[name].set_table(std::move(table));
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("read_csv: bad sidecar '" + meta_path + "': " + e.what());
    }
    if (!m.urls.empty() && m.urls.size() != m.labels.size())
      throw ParseError("read_csv: sidecar url count does not match row count");
  }
  return m;
}

}  // namespace

FeatureMatrix read_csv(const std::string& path) { return read_csv_impl(path, nullptr); }

FeatureMatrix read_csv(const std::string& path, const std::vector<std::string>& expected) {
  return read_csv_impl(path, &expected);
}

// ---------------------------------------------------------------------------
// Folds

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

namespace {

// Fisher-Yates with an explicitly specified engine so plans are identical
// across standard-library implementations.
void seeded_shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

void check_k(std::size_t n, std::size_t k) {
  if (k < 2 || k > n)
    throw InvalidArgument("InvalidK: k=" + std::to_string(k) + " for " + std::to_string(n) + " samples");
}

}  // namespace

FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
  check_k(labels.size(), k);
  FoldPlan plan;
  plan.k = k;
  plan.stratified = true;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), 0);

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::size_t offset = 0;
  for (auto& [cls, idx] : members) {
    if (idx.size() < k)
      plan.warnings.push_back("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                              " members, fewer than k=" + std::to_string(k));
    seeded_shuffle(idx, rng);
    for (std::size_t j = 0; j < idx.size(); ++j) plan.assignments[idx[j]] = (offset + j) % k;
    offset = (offset + idx.size()) % k;
  }
  return plan;
}

FoldPlan stratified_kfold(const std::vector<Label>& labels, std::size_t k, std::uint64_t seed) {
  std::vector<int> ints;
  ints.reserve(labels.size());
  for (Label l : labels) ints.push_back(static_cast<int>(l));
  return stratified_kfold(ints, k, seed);
}

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  check_k(n, k);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  seeded_shuffle(idx, rng);
  for (std::size_t j = 0; j < n; ++j) plan.assignments[idx[j]] = j % k;
  return plan;
}

}  // namespace malweb
