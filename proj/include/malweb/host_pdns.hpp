#pragma once

// Host and passive-DNS features computed from already-collected intel.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "malweb/sample.hpp"

namespace malweb {

/// Price value emitted when a TLD has no pricing row.
inline constexpr double kUnknownPrice = -1.0;

struct TldPrice {
  double register_usd = kUnknownPrice;
  double renew_usd = kUnknownPrice;
  double transfer_usd = kUnknownPrice;
  double icann_fee_usd = kUnknownPrice;
  bool operator==(const TldPrice&) const = default;
};

/// CSV-backed table with header tld,register_usd,renew_usd,transfer_usd,icann_fee_usd.
class TldPricing {
 public:
  static TldPricing from_csv_text(std::string_view body);
  static TldPricing from_file(const std::string& path);

  void set(std::string tld, TldPrice price);
  std::optional<TldPrice> find(std::string_view tld) const;
  std::size_t size() const noexcept { return rows_.size(); }

 private:
  std::map<std::string, TldPrice, std::less<>> rows_;
};

struct HostFeatures {
  std::size_t ip_resolution_count = 0;
  TldPrice price;
  std::string country;
  std::string registrar;
  bool whois_complete = false;
  bool https = false;
  std::vector<std::string> warnings;
};

/// Looks the TLD up as given, then by its last label ("co.uk" -> "uk").
/// Unknown TLDs get kUnknownPrice for all four fees plus a warning.
HostFeatures extract_host_features(const HostIntel& intel, const TldPricing& pricing);

struct PdnsFeatures {
  std::size_t history_length = 0;
  std::size_t unique_ips = 0;
  std::size_t unique_hostnames = 0;
  std::size_t country_count = 0;
  std::size_t suspicious_asn_count = 0;
  std::size_t false_positive_asn_count = 0;
  std::size_t asn_switch_count = 0;
  bool operator==(const PdnsFeatures&) const = default;
};

using AsnSet = std::set<std::string, std::less<>>;

AsnSet load_asn_list(const std::string& path);

PdnsFeatures pdns_features(const std::vector<PassiveDnsRecord>& records, const AsnSet& suspicious_asns,
                           const AsnSet& false_positive_asns);

/// Adjacent ASN changes after ordering by (first_seen, last_seen, asn).
std::size_t asn_switch_count(std::vector<PassiveDnsRecord> records);

/// WHOIS is complete when registrar, creation date and registrant country are all present.
bool whois_complete(std::string_view registrar, std::string_view creation_date, std::string_view registrant_country);

}  // namespace malweb
