#pragma once

// Network side: page fetching, threat-intel provider clients, label
// normalization hookup and the on-disk sample cache. Nothing else in the
// toolkit opens a socket.

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "malweb/error.hpp"
#include "malweb/labels.hpp"
#include "malweb/sample.hpp"
#include "malweb/url_lexical.hpp"

namespace malweb {

class NetworkError : public Error {
 public:
  using Error::Error;
};
class Timeout : public NetworkError {
 public:
  using NetworkError::NetworkError;
};
class DnsFailure : public NetworkError {
 public:
  using NetworkError::NetworkError;
};
class ConnectionFailed : public NetworkError {
 public:
  using NetworkError::NetworkError;
};
class TooLarge : public NetworkError {
 public:
  using NetworkError::NetworkError;
};
class HttpError : public NetworkError {
 public:
  HttpError(int status, const std::string& url)
      : NetworkError("HTTP " + std::to_string(status) + " for " + url), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class RateLimited : public NetworkError {
 public:
  RateLimited(const std::string& what, double retry_after_s)
      : NetworkError(what), retry_after_(retry_after_s) {}
  /// Seconds, 0 when the provider did not say.
  double retry_after() const noexcept { return retry_after_; }

 private:
  double retry_after_;
};
class AuthFailure : public NetworkError {
 public:
  using NetworkError::NetworkError;
};
class ProviderUnavailable : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

// ---- transport ------------------------------------------------------------

struct HttpRequest {
  std::string method = "GET";
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::string content_type;
};

struct HttpResponse {
  int status = 0;
  /// Lowercase header names.
  std::map<std::string, std::string> headers;
  std::string body;
  bool truncated = false;

  std::optional<std::string> header(std::string_view name) const;
};

struct TransportLimits {
  double timeout_s = 10.0;
  /// Bodies are cut at this many bytes and flagged as truncated.
  std::size_t max_body_size = 2 * 1024 * 1024;
  std::string user_agent = "malweb/0.1";
  bool verify_tls = true;
};

/// One request, no redirect following. Throws Timeout, DnsFailure or
/// ConnectionFailed. Implementations must be safe to call concurrently.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse send(const HttpRequest& req, const TransportLimits& limits) = 0;
};

/// Real sockets via cpp-httplib (TLS through OpenSSL).
class NetTransport final : public HttpTransport {
 public:
  HttpResponse send(const HttpRequest& req, const TransportLimits& limits) override;
};

/// Serves canned responses. Requests are matched on method + URL, and on
/// the body too when the fixture pins one. Unmatched requests get a 404.
/// Fixture file: JSON array of
///   {"method","url","request_body"?,"status","headers"?,"body"?|"body_file"?,"error"?}
/// where error is "timeout", "dns" or "connect".
class ReplayTransport final : public HttpTransport {
 public:
  struct Entry {
    std::string method = "GET";
    std::string url;
    std::optional<std::string> request_body;
    HttpResponse response;
    std::string error;
  };

  ReplayTransport() = default;
  static std::shared_ptr<ReplayTransport> from_file(const std::string& path);
  /// `base_dir` resolves relative body_file entries.
  static std::shared_ptr<ReplayTransport> from_json(const nlohmann::json& j, const std::string& base_dir = ".");

  void add(Entry e);
  void add(std::string method, std::string url, int status, std::string body,
           std::map<std::string, std::string> headers = {});
  void fail(std::string method, std::string url, std::string error);

  HttpResponse send(const HttpRequest& req, const TransportLimits& limits) override;

  std::size_t calls() const noexcept { return calls_.load(); }
  std::vector<std::string> requested_urls() const;

 private:
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
  std::vector<std::string> log_;
  std::atomic<std::size_t> calls_{0};
};

// ---- pages ----------------------------------------------------------------

struct FetchConfig {
  double timeout_s = 10.0;
  std::size_t max_body_size = 2 * 1024 * 1024;
  std::size_t max_assets = 20;
  std::size_t max_redirects = 5;
  std::string user_agent = "Mozilla/5.0 (compatible; malweb/0.1)";
  /// Malicious hosts often serve self-signed certificates.
  bool verify_tls = false;

  static FetchConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Script src and stylesheet href references, resolved against `base`,
/// deduplicated, in document order.
struct AssetRefs {
  std::vector<std::string> js;
  std::vector<std::string> css;
};
AssetRefs find_asset_refs(std::string_view html, std::string_view base_url);

/// Homepage + referenced JS/CSS + robots.txt. Never throws for network
/// trouble: failures leave empty bodies and an entry in `errors`.
/// Throws UnparsableUrl when `url` is not http(s).
FetchedPage fetch_page(const std::string& url, const FetchConfig& cfg, HttpTransport& transport);

// ---- threat intel ---------------------------------------------------------

enum class Provider { XForce, OTX, URLHaus, ThreatFox };

std::string_view provider_name(Provider p);
std::optional<Provider> parse_provider(std::string_view s);
const std::vector<Provider>& all_providers();

struct IntelResponse {
  Provider provider = Provider::XForce;
  std::vector<std::string> raw_labels;
  std::vector<PassiveDnsRecord> pdns_records;
  std::optional<HostIntel> host_intel_partial;
  bool empty() const { return raw_labels.empty() && pdns_records.empty() && !host_intel_partial; }
};

/// Seconds to sleep; tests swap in a recorder.
using Sleeper = std::function<void(double)>;
Sleeper real_sleeper();

struct RetryPolicy {
  double base_s = 1.0;
  double factor = 2.0;
  int max_attempts = 5;
  /// Delay before retry number `attempt` (1-based).
  double delay(int attempt) const;
};

/// Per-provider rate limiter, shared by every worker using the client.
class TokenBucket {
 public:
  TokenBucket(double rate_per_s, double burst);
  /// Takes a token at time `now_s` if one is available; otherwise returns the
  /// wait until one is, without taking it.
  double try_acquire(double now_s);
  /// Blocks until a token is taken.
  void acquire(const Sleeper& sleep);

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  double last_ = -1.0;
};

struct ClientConfig {
  std::string base_url;  // empty = provider default
  std::string api_key;
  std::string api_password;  // X-Force uses key:password basic auth
  double rate_per_s = 1.0;
  double burst = 5.0;
  double timeout_s = 20.0;
  RetryPolicy retry;

  /// Defaults plus keys from XFORCE_KEY / XFORCE_PASSWORD, OTX_KEY,
  /// URLHAUS_KEY, THREATFOX_KEY. XFORCE_KEY may also be "key:password".
  static ClientConfig from_env(Provider p);
};

std::string default_base_url(Provider p);
/// Whether the provider refuses anonymous queries.
bool requires_credentials(Provider p);

// Provider JSON -> IntelResponse. Absent fields become empty lists.
IntelResponse parse_xforce_url(const nlohmann::json& j);
void merge_xforce_whois(const nlohmann::json& j, IntelResponse& out);
IntelResponse parse_otx_general(const nlohmann::json& j);
void merge_otx_passive_dns(const nlohmann::json& j, IntelResponse& out);
IntelResponse parse_urlhaus(const nlohmann::json& j);
IntelResponse parse_threatfox(const nlohmann::json& j);

/// "2021-03-04T05:06:07", "2021-03-04 05:06:07 UTC", "2021-03-04"; 0 when unparsable.
Timestamp parse_timestamp(std::string_view s);

/// Thread-safe client for one provider.
class IntelClient {
 public:
  IntelClient(Provider p, ClientConfig cfg, std::shared_ptr<HttpTransport> transport,
              Sleeper sleep = real_sleeper());

  /// Throws AuthFailure up front when credentials are required but absent.
  /// RateLimited and ProviderUnavailable are retried with exponential backoff;
  /// the last one is rethrown once attempts run out.
  IntelResponse query(const std::string& indicator);

  Provider provider() const noexcept { return provider_; }

 private:
  IntelResponse query_once(const std::string& indicator);
  nlohmann::json call(HttpRequest req, bool not_found_is_empty);

  Provider provider_;
  ClientConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleep_;
  TokenBucket bucket_;
};

IntelResponse query_intel(Provider p, const std::string& indicator, const ClientConfig& cfg,
                          std::shared_ptr<HttpTransport> transport, Sleeper sleep = real_sleeper());

// ---- hosts ----------------------------------------------------------------

class Resolver {
 public:
  virtual ~Resolver() = default;
  /// Throws DnsFailure.
  virtual std::vector<std::string> resolve(const std::string& host) = 0;
};

class SystemResolver final : public Resolver {
 public:
  std::vector<std::string> resolve(const std::string& host) override;
};

class StaticResolver final : public Resolver {
 public:
  void set(std::string host, std::vector<std::string> ips) { table_[std::move(host)] = std::move(ips); }
  std::vector<std::string> resolve(const std::string& host) override;

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

// ---- cache ----------------------------------------------------------------

std::string sha256_hex(std::string_view data);
/// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view s);

/// One JSON document per sample at <root>/<2 hex>/<sha256(url)>.json.
/// Writes go through a temporary file and are serialized per key.
class SampleCache {
 public:
  explicit SampleCache(std::string root);
  std::string path_for(const std::string& url) const;
  std::optional<LabeledSample> load(const std::string& url) const;
  void store(const LabeledSample& s);
  /// Every cached sample, ordered by file path.
  std::vector<LabeledSample> load_all() const;
  const std::string& root() const noexcept { return root_; }

 private:
  std::mutex& lock_for(const std::string& key);
  std::string root_;
  std::mutex locks_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

// ---- samples --------------------------------------------------------------

struct AcquisitionConfig {
  FetchConfig fetch;
  std::map<Provider, ClientConfig> providers;
  unsigned max_concurrency = 4;

  /// FetchConfig fields under "fetch", provider overrides under
  /// "providers": {"OTX": {"rate_per_s": 2, ...}}, plus "max_concurrency".
  /// Providers absent from the document use ClientConfig::from_env.
  static AcquisitionConfig from_json(const nlohmann::json& j);
  static AcquisitionConfig from_file(const std::string& path);
  /// All four providers with environment credentials.
  static AcquisitionConfig defaults();
};

class Acquirer {
 public:
  Acquirer(AcquisitionConfig cfg, std::shared_ptr<HttpTransport> transport, std::shared_ptr<Resolver> resolver,
           std::shared_ptr<SampleCache> cache = nullptr, PublicSuffixList suffixes = {},
           Sleeper sleep = real_sleeper());

  /// Page + every configured provider + DNS, merged. Single-source failures
  /// become annotations. Cache hits make no network calls.
  LabeledSample build_sample(const std::string& url, Label label);

  /// Bounded by max_concurrency. Result order follows `items`.
  std::vector<LabeledSample> build_all(const std::vector<std::pair<std::string, Label>>& items,
                                       const std::function<void(std::size_t, const LabeledSample&)>& progress = {});

 private:
  AcquisitionConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  std::shared_ptr<Resolver> resolver_;
  std::shared_ptr<SampleCache> cache_;
  PublicSuffixList suffixes_;
  std::vector<std::unique_ptr<IntelClient>> clients_;
};

/// Convenience wrapper over Acquirer.
LabeledSample build_sample(const std::string& url, Label label, const AcquisitionConfig& cfg,
                           std::shared_ptr<HttpTransport> transport, std::shared_ptr<Resolver> resolver,
                           std::shared_ptr<SampleCache> cache = nullptr);

}  // namespace malweb
