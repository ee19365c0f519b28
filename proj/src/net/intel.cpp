#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <thread>

#include <nlohmann/json.hpp>

#include "malweb/acquisition.hpp"
#include "malweb/host_pdns.hpp"
#include "malweb/text.hpp"
#include "net_internal.hpp"

namespace malweb {

std::string_view provider_name(Provider p) {
  switch (p) {
    case Provider::XForce: return "XForce";
    case Provider::OTX: return "OTX";
    case Provider::URLHaus: return "URLHaus";
    case Provider::ThreatFox: return "ThreatFox";
  }
  return "?";
}

std::optional<Provider> parse_provider(std::string_view s) {
  const std::string k = text::to_lower(text::trim(s));
  if (k == "xforce" || k == "x-force" || k == "ibm") return Provider::XForce;
  if (k == "otx" || k == "alienvault") return Provider::OTX;
  if (k == "urlhaus") return Provider::URLHaus;
  if (k == "threatfox") return Provider::ThreatFox;
  return std::nullopt;
}

const std::vector<Provider>& all_providers() {
  static const std::vector<Provider> v{Provider::XForce, Provider::OTX, Provider::URLHaus, Provider::ThreatFox};
  return v;
}

Sleeper real_sleeper() {
  return [](double s) {
    if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };
}

double RetryPolicy::delay(int attempt) const {
  return base_s * std::pow(factor, static_cast<double>(std::max(attempt, 1) - 1));
}

TokenBucket::TokenBucket(double rate_per_s, double burst)
    : rate_(rate_per_s), burst_(std::max(burst, 1.0)), tokens_(std::max(burst, 1.0)) {
  if (!(rate_per_s > 0.0)) throw InvalidArgument("token bucket: rate must be > 0");
}

double TokenBucket::try_acquire(double now_s) {
  std::lock_guard lock(mu_);
  if (last_ >= 0.0 && now_s > last_) tokens_ = std::min(burst_, tokens_ + (now_s - last_) * rate_);
  if (last_ < 0.0 || now_s > last_) last_ = now_s;
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return 0.0;
  }
  return (1.0 - tokens_) / rate_;
}

void TokenBucket::acquire(const Sleeper& sleep) {
  double wait = 0.0;
  {
    std::lock_guard lock(mu_);
    const double now = std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
    if (last_ >= 0.0 && now > last_) tokens_ = std::min(burst_, tokens_ + (now - last_) * rate_);
    if (last_ < 0.0 || now > last_) last_ = now;
    // Going into debt reserves a slot; concurrent callers queue up behind it.
    tokens_ -= 1.0;
    if (tokens_ < 0.0) wait = -tokens_ / rate_;
  }
  if (wait > 0.0) sleep(wait);
}

std::string default_base_url(Provider p) {
  switch (p) {
    case Provider::XForce: return "https://api.xforce.ibmcloud.com/api";
    case Provider::OTX: return "https://otx.alienvault.com/api/v1";
    case Provider::URLHaus: return "https://urlhaus-api.abuse.ch/v1";
    case Provider::ThreatFox: return "https://threatfox-api.abuse.ch/api/v1";
  }
  return {};
}

bool requires_credentials(Provider p) { return p == Provider::XForce || p == Provider::OTX; }

namespace {

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

std::string base64(std::string_view s) {
  std::string out(4 * ((s.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(s.data()), static_cast<int>(s.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string str_or_empty(const nlohmann::json& j, const char* key) {
  if (!j.is_object()) return {};
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

void push_unique(std::vector<std::string>& v, std::string s) {
  s = std::string(text::trim(s));
  if (s.empty()) return;
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(std::move(s));
}

}  // namespace

ClientConfig ClientConfig::from_env(Provider p) {
  ClientConfig c;
  switch (p) {
    case Provider::XForce: {
      c.api_key = env("XFORCE_KEY");
      c.api_password = env("XFORCE_PASSWORD");
      if (c.api_password.empty()) {
        if (auto colon = c.api_key.find(':'); colon != std::string::npos) {
          c.api_password = c.api_key.substr(colon + 1);
          c.api_key.resize(colon);
        }
      }
      break;
    }
    case Provider::OTX: c.api_key = env("OTX_KEY"); break;
    case Provider::URLHaus: c.api_key = env("URLHAUS_KEY"); break;
    case Provider::ThreatFox: c.api_key = env("THREATFOX_KEY"); break;
  }
  return c;
}

Timestamp parse_timestamp(std::string_view s) {
  s = text::trim(s);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  auto num = [&](std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (!text::is_digit(s[i])) return false;
      v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
  };
  if (!num(0, 4, y) || s.size() < 10 || s[4] != '-' || !num(5, 2, mo) || s[7] != '-' || !num(8, 2, d)) return 0;
  if (s.size() >= 19 && (s[10] == 'T' || s[10] == ' ')) {
    if (!num(11, 2, h) || s[13] != ':' || !num(14, 2, mi) || s[16] != ':' || !num(17, 2, sec)) return 0;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) return 0;
  std::tm tm{};
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = sec;
  return static_cast<Timestamp>(timegm(&tm));
}

// ---- parsers --------------------------------------------------------------

IntelResponse parse_xforce_url(const nlohmann::json& j) {
  IntelResponse r;
  r.provider = Provider::XForce;
  if (!j.is_object()) return r;
  const nlohmann::json* result = &j;
  if (auto it = j.find("result"); it != j.end() && it->is_object()) result = &*it;
  if (auto it = result->find("cats"); it != result->end() && it->is_object())
    for (const auto& [cat, on] : it->items())
      if (!on.is_boolean() || on.get<bool>()) push_unique(r.raw_labels, cat);
  return r;
}

void merge_xforce_whois(const nlohmann::json& j, IntelResponse& out) {
  if (!j.is_object() || j.empty()) return;
  HostIntel h = out.host_intel_partial.value_or(HostIntel{});
  h.registrar = str_or_empty(j, "registrarName");
  std::string registrant_country;
  if (auto it = j.find("contact"); it != j.end() && it->is_array())
    for (const auto& c : *it)
      if (text::iequals(str_or_empty(c, "type"), "registrant")) registrant_country = str_or_empty(c, "country");
  h.whois_complete = whois_complete(h.registrar, str_or_empty(j, "createdDate"), registrant_country);
  out.host_intel_partial = std::move(h);
}

IntelResponse parse_otx_general(const nlohmann::json& j) {
  IntelResponse r;
  r.provider = Provider::OTX;
  if (!j.is_object()) return r;
  auto pi = j.find("pulse_info");
  if (pi == j.end() || !pi->is_object()) return r;
  auto pulses = pi->find("pulses");
  if (pulses == pi->end() || !pulses->is_array()) return r;
  for (const auto& p : *pulses) {
    if (!p.is_object()) continue;
    if (auto t = p.find("tags"); t != p.end() && t->is_array())
      for (const auto& tag : *t)
        if (tag.is_string()) push_unique(r.raw_labels, tag.get<std::string>());
  }
  return r;
}

void merge_otx_passive_dns(const nlohmann::json& j, IntelResponse& out) {
  if (!j.is_object()) return;
  auto list = j.find("passive_dns");
  if (list == j.end() || !list->is_array()) return;
  for (const auto& e : *list) {
    if (!e.is_object()) continue;
    PassiveDnsRecord rec;
    rec.hostname = str_or_empty(e, "hostname");
    rec.ip = str_or_empty(e, "address");
    std::string asn = str_or_empty(e, "asn");
    if (auto sp = asn.find(' '); sp != std::string::npos) asn.resize(sp);
    rec.asn = asn;
    rec.country = str_or_empty(e, "flag_code");
    rec.first_seen = parse_timestamp(str_or_empty(e, "first"));
    rec.last_seen = parse_timestamp(str_or_empty(e, "last"));
    out.pdns_records.push_back(std::move(rec));
  }
}

namespace {

void merge_otx_geo(const nlohmann::json& j, IntelResponse& out) {
  const std::string country = str_or_empty(j, "country_name");
  if (country.empty()) return;
  HostIntel h = out.host_intel_partial.value_or(HostIntel{});
  h.country = country;
  out.host_intel_partial = std::move(h);
}

}  // namespace

IntelResponse parse_urlhaus(const nlohmann::json& j) {
  IntelResponse r;
  r.provider = Provider::URLHaus;
  if (!j.is_object() || str_or_empty(j, "query_status") != "ok") return r;
  push_unique(r.raw_labels, str_or_empty(j, "threat"));
  if (auto t = j.find("tags"); t != j.end() && t->is_array())
    for (const auto& tag : *t)
      if (tag.is_string()) push_unique(r.raw_labels, tag.get<std::string>());
  return r;
}

IntelResponse parse_threatfox(const nlohmann::json& j) {
  IntelResponse r;
  r.provider = Provider::ThreatFox;
  if (!j.is_object() || str_or_empty(j, "query_status") != "ok") return r;
  auto data = j.find("data");
  if (data == j.end() || !data->is_array()) return r;
  for (const auto& d : *data) {
    push_unique(r.raw_labels, str_or_empty(d, "threat_type"));
    push_unique(r.raw_labels, str_or_empty(d, "malware_printable"));
    if (auto t = d.find("tags"); t != d.end() && t->is_array())
      for (const auto& tag : *t)
        if (tag.is_string()) push_unique(r.raw_labels, tag.get<std::string>());
  }
  return r;
}

// ---- client ---------------------------------------------------------------

IntelClient::IntelClient(Provider p, ClientConfig cfg, std::shared_ptr<HttpTransport> transport, Sleeper sleep)
    : provider_(p),
      cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      sleep_(std::move(sleep)),
      bucket_(cfg_.rate_per_s, cfg_.burst) {
  if (cfg_.base_url.empty()) cfg_.base_url = default_base_url(p);
  while (!cfg_.base_url.empty() && cfg_.base_url.back() == '/') cfg_.base_url.pop_back();
  if (!transport_) throw InvalidArgument("intel client: no transport");
}

nlohmann::json IntelClient::call(HttpRequest req, bool not_found_is_empty) {
  const std::string name(provider_name(provider_));
  switch (provider_) {
    case Provider::XForce:
      req.headers.emplace_back("Authorization", "Basic " + base64(cfg_.api_key + ":" + cfg_.api_password));
      req.headers.emplace_back("Accept", "application/json");
      break;
    case Provider::OTX: req.headers.emplace_back("X-OTX-API-KEY", cfg_.api_key); break;
    case Provider::URLHaus:
    case Provider::ThreatFox:
      if (!cfg_.api_key.empty()) req.headers.emplace_back("Auth-Key", cfg_.api_key);
      break;
  }
  TransportLimits lim;
  lim.timeout_s = cfg_.timeout_s;
  lim.max_body_size = 32 * 1024 * 1024;
  HttpResponse res;
  try {
    res = transport_->send(req, lim);
  } catch (const NetworkError& e) {
    throw ProviderUnavailable(name + ": " + e.what());
  }
  if (res.status == 401 || res.status == 403) throw AuthFailure(name + ": HTTP " + std::to_string(res.status));
  if (res.status == 429) {
    double after = 0.0;
    if (auto h = res.header("retry-after")) {
      char* end = nullptr;
      const double v = std::strtod(h->c_str(), &end);
      if (end != h->c_str() && v > 0) after = v;
    }
    throw RateLimited(name + ": rate limited", after);
  }
  if (res.status == 404 && not_found_is_empty) return nullptr;
  if (res.status < 200 || res.status >= 300)
    throw ProviderUnavailable(name + ": HTTP " + std::to_string(res.status) + " for " + req.url);
  if (text::trim(res.body).empty()) return nullptr;
  try {
    return nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderUnavailable(name + ": malformed JSON: " + e.what());
  }
}

IntelResponse IntelClient::query_once(const std::string& indicator) {
  const std::string host = detail::host_of(indicator);
  const bool is_url = detail::split_target(indicator).has_value();
  HttpRequest req;
  switch (provider_) {
    case Provider::XForce: {
      req.url = cfg_.base_url + "/url/" + detail::url_encode(indicator);
      IntelResponse r = parse_xforce_url(call(req, true));
      req.url = cfg_.base_url + "/whois/" + detail::url_encode(host);
      merge_xforce_whois(call(req, true), r);
      return r;
    }
    case Provider::OTX: {
      IntelResponse r;
      const std::string section = is_ipv4_literal(host) ? "IPv4/" : "hostname/";
      if (is_url) {
        req.url = cfg_.base_url + "/indicators/url/" + detail::url_encode(indicator) + "/general";
        r = parse_otx_general(call(req, true));
      }
      r.provider = Provider::OTX;
      req.url = cfg_.base_url + "/indicators/" + section + detail::url_encode(host) + "/passive_dns";
      merge_otx_passive_dns(call(req, true), r);
      req.url = cfg_.base_url + "/indicators/" + section + detail::url_encode(host) + "/geo";
      merge_otx_geo(call(req, true), r);
      return r;
    }
    case Provider::URLHaus: {
      req.method = "POST";
      if (is_url) {
        req.url = cfg_.base_url + "/url/";
        req.body = "url=" + detail::url_encode(indicator);
      } else {
        req.url = cfg_.base_url + "/host/";
        req.body = "host=" + detail::url_encode(host);
      }
      req.content_type = "application/x-www-form-urlencoded";
      return parse_urlhaus(call(req, false));
    }
    case Provider::ThreatFox: {
      req.method = "POST";
      req.url = cfg_.base_url + "/";
      req.content_type = "application/json";
      req.body = nlohmann::json{{"query", "search_ioc"}, {"search_term", host}}.dump();
      return parse_threatfox(call(req, false));
    }
  }
  return {};
}

IntelResponse IntelClient::query(const std::string& indicator) {
  if (requires_credentials(provider_) && cfg_.api_key.empty())
    throw AuthFailure(std::string(provider_name(provider_)) + ": no API key configured");
  const int attempts = std::max(cfg_.retry.max_attempts, 1);
  for (int attempt = 1;; ++attempt) {
    bucket_.acquire(sleep_);
    try {
      return query_once(indicator);
    } catch (const RateLimited& e) {
      if (attempt >= attempts) throw;
      sleep_(std::max(e.retry_after(), cfg_.retry.delay(attempt)));
    } catch (const ProviderUnavailable&) {
      if (attempt >= attempts) throw;
      sleep_(cfg_.retry.delay(attempt));
    }
  }
}

IntelResponse query_intel(Provider p, const std::string& indicator, const ClientConfig& cfg,
                          std::shared_ptr<HttpTransport> transport, Sleeper sleep) {
  IntelClient client(p, cfg, std::move(transport), std::move(sleep));
  return client.query(indicator);
}

}  // namespace malweb
