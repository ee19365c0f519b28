#pragma once

// Raw artifacts collected for one website and the nine-class label.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace malweb {

enum class Label : int {
  Benign = 0,
  Phishing,
  CommandAndControl,
  Spam,
  MalwareHosting,
  MaliciousAdHosting,
  HostScanner,
  ExploitKit,
  CreditCardSkimmer,
};

inline constexpr std::size_t kLabelCount = 9;

std::string_view label_name(Label label);
/// Exact canonical name lookup ("Benign", "CommandAndControl", ...).
std::optional<Label> label_from_name(std::string_view name);
const std::array<Label, kLabelCount>& all_labels();

/// Unix seconds.
using Timestamp = std::int64_t;

struct Asset {
  std::string url;
  std::string body;
  bool operator==(const Asset&) const = default;
};

struct FetchedPage {
  std::string final_url;
  bool https = false;
  std::string html;
  std::vector<Asset> external_js;
  std::vector<Asset> external_css;
  std::optional<std::string> robots_body;
  Timestamp fetched_at = 0;
  bool truncated = false;
  /// One entry per failed step ("Timeout: ...", "HttpError(404): ...").
  std::vector<std::string> errors;
  bool operator==(const FetchedPage&) const = default;
};

struct PassiveDnsRecord {
  std::string hostname;
  std::string ip;
  std::string asn;
  std::string country;
  Timestamp first_seen = 0;
  Timestamp last_seen = 0;
  bool operator==(const PassiveDnsRecord&) const = default;
};

struct HostIntel {
  std::vector<std::string> resolved_ips;
  std::string country;
  bool whois_complete = false;
  bool https = false;
  std::string registrar;
  std::string tld;
  bool operator==(const HostIntel&) const = default;
};

struct LabeledSample {
  std::string url;
  Label label = Label::Benign;
  FetchedPage page;
  std::vector<PassiveDnsRecord> pdns_records;
  HostIntel host;
  std::vector<std::string> raw_labels;
  std::vector<std::string> annotations;
  bool operator==(const LabeledSample&) const = default;
};

void to_json(nlohmann::json& j, const FetchedPage& p);
void from_json(const nlohmann::json& j, FetchedPage& p);
void to_json(nlohmann::json& j, const PassiveDnsRecord& r);
void from_json(const nlohmann::json& j, PassiveDnsRecord& r);
void to_json(nlohmann::json& j, const HostIntel& h);
void from_json(const nlohmann::json& j, HostIntel& h);
void to_json(nlohmann::json& j, const LabeledSample& s);
void from_json(const nlohmann::json& j, LabeledSample& s);

/// Canonical serialized form (sorted keys, two-space indent, trailing newline).
std::string dump_sample(const LabeledSample& s);
LabeledSample load_sample(std::string_view json_text);

}  // namespace malweb
