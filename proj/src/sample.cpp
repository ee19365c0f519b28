#include "malweb/sample.hpp"

#include <nlohmann/json.hpp>

#include "malweb/error.hpp"

namespace malweb {

namespace {
constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "Benign",         "Phishing",           "CommandAndControl", "Spam",
    "MalwareHosting", "MaliciousAdHosting", "HostScanner",       "ExploitKit",
    "CreditCardSkimmer",
};
}  // namespace

std::string_view label_name(Label label) { return kLabelNames.at(static_cast<std::size_t>(label)); }

std::optional<Label> label_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i)
    if (kLabelNames[i] == name) return static_cast<Label>(i);
  return std::nullopt;
}

const std::array<Label, kLabelCount>& all_labels() {
  static const std::array<Label, kLabelCount> labels = [] {
    std::array<Label, kLabelCount> out{};
    for (std::size_t i = 0; i < kLabelCount; ++i) out[i] = static_cast<Label>(i);
    return out;
  }();
  return labels;
}

void to_json(nlohmann::json& j, const Asset& a) { j = {{"url", a.url}, {"body", a.body}}; }
void from_json(const nlohmann::json& j, Asset& a) {
  j.at("url").get_to(a.url);
  j.at("body").get_to(a.body);
}

void to_json(nlohmann::json& j, const FetchedPage& p) {
  j = {{"final_url", p.final_url},
       {"https", p.https},
       {"html", p.html},
       {"external_js", p.external_js},
       {"external_css", p.external_css},
       {"robots_body", p.robots_body ? nlohmann::json(*p.robots_body) : nlohmann::json(nullptr)},
       {"fetched_at", p.fetched_at},
       {"truncated", p.truncated},
       {"errors", p.errors}};
}

void from_json(const nlohmann::json& j, FetchedPage& p) {
  j.at("final_url").get_to(p.final_url);
  j.at("https").get_to(p.https);
  j.at("html").get_to(p.html);
  j.at("external_js").get_to(p.external_js);
  j.at("external_css").get_to(p.external_css);
  const auto& robots = j.at("robots_body");
  p.robots_body = robots.is_null() ? std::nullopt : std::optional<std::string>(robots.get<std::string>());
  j.at("fetched_at").get_to(p.fetched_at);
  p.truncated = j.value("truncated", false);
  p.errors = j.value("errors", std::vector<std::string>{});
}

void to_json(nlohmann::json& j, const PassiveDnsRecord& r) {
  j = {{"hostname", r.hostname}, {"ip", r.ip},
       {"asn", r.asn},           {"country", r.country},
       {"first_seen", r.first_seen}, {"last_seen", r.last_seen}};
}

void from_json(const nlohmann::json& j, PassiveDnsRecord& r) {
  j.at("hostname").get_to(r.hostname);
  j.at("ip").get_to(r.ip);
  j.at("asn").get_to(r.asn);
  j.at("country").get_to(r.country);
  j.at("first_seen").get_to(r.first_seen);
  j.at("last_seen").get_to(r.last_seen);
}

void to_json(nlohmann::json& j, const HostIntel& h) {
  j = {{"resolved_ips", h.resolved_ips}, {"country", h.country}, {"whois_complete", h.whois_complete},
       {"https", h.https}, {"registrar", h.registrar}, {"tld", h.tld}};
}

void from_json(const nlohmann::json& j, HostIntel& h) {
  j.at("resolved_ips").get_to(h.resolved_ips);
  j.at("country").get_to(h.country);
  j.at("whois_complete").get_to(h.whois_complete);
  j.at("https").get_to(h.https);
  j.at("registrar").get_to(h.registrar);
  j.at("tld").get_to(h.tld);
}

void to_json(nlohmann::json& j, const LabeledSample& s) {
  j = {{"url", s.url},
       {"label", std::string(label_name(s.label))},
       {"page", s.page},
       {"pdns_records", s.pdns_records},
       {"host", s.host},
       {"raw_labels", s.raw_labels},
       {"annotations", s.annotations}};
}

void from_json(const nlohmann::json& j, LabeledSample& s) {
  j.at("url").get_to(s.url);
  const auto name = j.at("label").get<std::string>();
  const auto label = label_from_name(name);
  if (!label) throw ParseError("sample: unknown label name '" + name + "'");
  s.label = *label;
  j.at("page").get_to(s.page);
  j.at("pdns_records").get_to(s.pdns_records);
  j.at("host").get_to(s.host);
  s.raw_labels = j.value("raw_labels", std::vector<std::string>{});
  s.annotations = j.value("annotations", std::vector<std::string>{});
}

std::string dump_sample(const LabeledSample& s) {
  return nlohmann::json(s).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

LabeledSample load_sample(std::string_view json_text) {
  try {
    return nlohmann::json::parse(json_text).get<LabeledSample>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sample: ") + e.what());
  }
}

}  // namespace malweb
