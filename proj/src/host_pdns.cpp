#include "malweb/host_pdns.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <tuple>

#include "malweb/csv.hpp"
#include "malweb/error.hpp"
#include "malweb/text.hpp"

namespace malweb {

namespace {

double parse_price(const std::string& cell, std::size_t line) {
  const auto t = text::trim(cell);
  const std::string s(t);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw ParseError("pricing: bad number '" + s + "' on line " + std::to_string(line));
  if (v < 0) throw ParseError("pricing: negative price on line " + std::to_string(line));
  return v;
}

}  // namespace

TldPricing TldPricing::from_csv_text(std::string_view body) {
  const auto rows = csv::parse(body);
  if (rows.empty()) throw ParseError("pricing: empty file");
  const csv::Row expected = {"tld", "register_usd", "renew_usd", "transfer_usd", "icann_fee_usd"};
  csv::Row header;
  for (const auto& h : rows[0]) header.emplace_back(text::trim(h));
  if (header != expected)
    throw SchemaMismatch(text::join(expected, ","), text::join(header, ","));

  TldPricing table;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 5) throw ParseError("pricing: expected 5 columns on line " + std::to_string(i + 1));
    std::string tld = text::to_lower(text::trim(r[0]));
    while (!tld.empty() && tld.front() == '.') tld.erase(tld.begin());
    table.set(std::move(tld), {parse_price(r[1], i + 1), parse_price(r[2], i + 1), parse_price(r[3], i + 1),
                               parse_price(r[4], i + 1)});
  }
  return table;
}

TldPricing TldPricing::from_file(const std::string& path) { return from_csv_text(text::read_file(path)); }

void TldPricing::set(std::string tld, TldPrice price) { rows_[std::move(tld)] = price; }

std::optional<TldPrice> TldPricing::find(std::string_view tld) const {
  const auto it = rows_.find(tld);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

HostFeatures extract_host_features(const HostIntel& intel, const TldPricing& pricing) {
  HostFeatures f;
  f.ip_resolution_count = intel.resolved_ips.size();
  f.country = intel.country;
  f.registrar = intel.registrar;
  f.whois_complete = intel.whois_complete;
  f.https = intel.https;

  const std::string tld = text::to_lower(intel.tld);
  auto price = pricing.find(tld);
  if (!price) {
    const auto dot = tld.rfind('.');
    if (dot != std::string::npos) price = pricing.find(std::string_view(tld).substr(dot + 1));
  }
  if (price) {
    f.price = *price;
  } else {
    f.warnings.push_back("UnknownTld: '" + intel.tld + "'");
  }
  return f;
}

AsnSet load_asn_list(const std::string& path) {
  AsnSet out;
  for (auto& line : text::read_list_file(path)) out.insert(std::move(line));
  return out;
}

PdnsFeatures pdns_features(const std::vector<PassiveDnsRecord>& records, const AsnSet& suspicious_asns,
                           const AsnSet& false_positive_asns) {
  PdnsFeatures f;
  f.history_length = records.size();
  std::set<std::string_view> ips, hosts, countries;
  for (const auto& r : records) {
    // Blank fields are missing data, not a distinct value.
    if (!r.ip.empty()) ips.insert(r.ip);
    if (!r.hostname.empty()) hosts.insert(r.hostname);
    if (!r.country.empty()) countries.insert(r.country);
    if (suspicious_asns.count(r.asn)) ++f.suspicious_asn_count;
    if (false_positive_asns.count(r.asn)) ++f.false_positive_asn_count;
  }
  f.unique_ips = ips.size();
  f.unique_hostnames = hosts.size();
  f.country_count = countries.size();
  f.asn_switch_count = asn_switch_count(records);
  return f;
}

std::size_t asn_switch_count(std::vector<PassiveDnsRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const PassiveDnsRecord& a, const PassiveDnsRecord& b) {
    return std::tie(a.first_seen, a.last_seen, a.asn) < std::tie(b.first_seen, b.last_seen, b.asn);
  });
  std::size_t switches = 0;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].asn != records[i - 1].asn) ++switches;
  return switches;
}

bool whois_complete(std::string_view registrar, std::string_view creation_date, std::string_view registrant_country) {
  return !text::trim(registrar).empty() && !text::trim(creation_date).empty() &&
         !text::trim(registrant_country).empty();
}

}  // namespace malweb
