#include <algorithm>
#include <atomic>
#include <thread>

#include <nlohmann/json.hpp>

#include "malweb/acquisition.hpp"
#include "malweb/text.hpp"
#include "net_internal.hpp"

namespace malweb {

AcquisitionConfig AcquisitionConfig::defaults() {
  AcquisitionConfig c;
  for (Provider p : all_providers()) c.providers[p] = ClientConfig::from_env(p);
  return c;
}

AcquisitionConfig AcquisitionConfig::from_json(const nlohmann::json& j) {
  AcquisitionConfig c = defaults();
  if (!j.is_object()) throw ParseError("acquisition config: expected an object");
  std::vector<std::string> problems;
  for (const auto& [k, v] : j.items()) {
    if (k == "fetch") {
      try {
        c.fetch = FetchConfig::from_json(v);
      } catch (const ParseError& e) {
        problems.push_back(e.what());
      }
    } else if (k == "max_concurrency") {
      if (!v.is_number_unsigned() || v.get<unsigned>() == 0) problems.push_back("max_concurrency: must be >= 1");
      else c.max_concurrency = v.get<unsigned>();
    } else if (k == "providers") {
      if (!v.is_object()) {
        problems.push_back("providers: expected an object");
        continue;
      }
      for (const auto& [name, pv] : v.items()) {
        auto p = parse_provider(name);
        if (!p) {
          problems.push_back("providers." + name + ": unknown provider");
          continue;
        }
        ClientConfig& cc = c.providers[*p];
        bool enabled = true;
        for (const auto& [ck, cv] : pv.items()) {
          const std::string where = "providers." + name + "." + ck;
          try {
            if (ck == "enabled") enabled = cv.get<bool>();
            else if (ck == "base_url") cc.base_url = cv.get<std::string>();
            else if (ck == "rate_per_s") cc.rate_per_s = cv.get<double>();
            else if (ck == "burst") cc.burst = cv.get<double>();
            else if (ck == "timeout_s") cc.timeout_s = cv.get<double>();
            else if (ck == "retry_base_s") cc.retry.base_s = cv.get<double>();
            else if (ck == "retry_factor") cc.retry.factor = cv.get<double>();
            else if (ck == "max_attempts") cc.retry.max_attempts = cv.get<int>();
            else problems.push_back(where + ": unknown key");
          } catch (const nlohmann::json::exception&) {
            problems.push_back(where + ": wrong type");
          }
        }
        if (!(cc.rate_per_s > 0.0)) problems.push_back("providers." + name + ".rate_per_s: must be > 0");
        if (!enabled) c.providers.erase(*p);
      }
    } else {
      problems.push_back(k + ": unknown key");
    }
  }
  if (!problems.empty()) throw ParseError("acquisition config: " + text::join(problems, "; "));
  return c;
}

AcquisitionConfig AcquisitionConfig::from_file(const std::string& path) {
  try {
    return from_json(nlohmann::json::parse(text::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace {

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const RateLimited*>(&e)) return "RateLimited";
  if (dynamic_cast<const AuthFailure*>(&e)) return "AuthFailure";
  if (dynamic_cast<const ProviderUnavailable*>(&e)) return "ProviderUnavailable";
  if (dynamic_cast<const Timeout*>(&e)) return "Timeout";
  if (dynamic_cast<const DnsFailure*>(&e)) return "DnsFailure";
  if (dynamic_cast<const UnparsableUrl*>(&e)) return "UnparsableUrl";
  return "Error";
}

void sanitize(std::string& s) {
  for (unsigned char c : s)
    if (c >= 0x80) {
      s = sanitize_utf8(s);
      return;
    }
}

void sanitize(LabeledSample& s) {
  sanitize(s.url);
  sanitize(s.page.final_url);
  sanitize(s.page.html);
  for (auto* list : {&s.page.external_js, &s.page.external_css})
    for (auto& a : *list) {
      sanitize(a.url);
      sanitize(a.body);
    }
  if (s.page.robots_body) sanitize(*s.page.robots_body);
  for (auto& e : s.page.errors) sanitize(e);
  for (auto& r : s.pdns_records) {
    sanitize(r.hostname);
    sanitize(r.ip);
    sanitize(r.asn);
    sanitize(r.country);
  }
  for (auto& ip : s.host.resolved_ips) sanitize(ip);
  sanitize(s.host.country);
  sanitize(s.host.registrar);
  sanitize(s.host.tld);
  for (auto& l : s.raw_labels) sanitize(l);
  for (auto& a : s.annotations) sanitize(a);
}

}  // namespace

Acquirer::Acquirer(AcquisitionConfig cfg, std::shared_ptr<HttpTransport> transport, std::shared_ptr<Resolver> resolver,
                   std::shared_ptr<SampleCache> cache, PublicSuffixList suffixes, Sleeper sleep)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      resolver_(std::move(resolver)),
      cache_(std::move(cache)),
      suffixes_(std::move(suffixes)) {
  if (!transport_) throw InvalidArgument("acquirer: no transport");
  if (!resolver_) throw InvalidArgument("acquirer: no resolver");
  for (const auto& [p, cc] : cfg_.providers) clients_.push_back(std::make_unique<IntelClient>(p, cc, transport_, sleep));
}

LabeledSample Acquirer::build_sample(const std::string& url, Label label) {
  if (cache_) {
    if (auto hit = cache_->load(url)) {
      if (hit->label != label) {
        hit->label = label;
        cache_->store(*hit);
      }
      return *hit;
    }
  }

  LabeledSample s;
  s.url = url;
  s.label = label;
  try {
    s.page = fetch_page(url, cfg_.fetch, *transport_);
  } catch (const Error& e) {
    s.page.final_url = url;
    s.page.errors.push_back(error_kind(e) + ": " + e.what());
  }
  for (const auto& e : s.page.errors) s.annotations.push_back("page: " + e);

  std::optional<HostIntel> partial;
  for (const auto& client : clients_) {
    const std::string name(provider_name(client->provider()));
    try {
      IntelResponse r = client->query(url);
      for (auto& l : r.raw_labels)
        if (std::find(s.raw_labels.begin(), s.raw_labels.end(), l) == s.raw_labels.end()) s.raw_labels.push_back(l);
      for (auto& rec : r.pdns_records) s.pdns_records.push_back(std::move(rec));
      if (r.host_intel_partial) {
        HostIntel& h = partial ? *partial : partial.emplace();
        const HostIntel& in = *r.host_intel_partial;
        if (h.registrar.empty()) h.registrar = in.registrar;
        if (h.country.empty()) h.country = in.country;
        h.whois_complete = h.whois_complete || in.whois_complete;
      }
    } catch (const Error& e) {
      s.annotations.push_back(name + ": " + error_kind(e) + ": " + e.what());
    }
  }

  const std::string host = detail::host_of(url);
  try {
    s.host.resolved_ips = resolver_->resolve(host);
  } catch (const Error& e) {
    s.annotations.push_back("dns: " + error_kind(e) + ": " + e.what());
  }
  s.host.https = s.page.https;
  if (partial) {
    s.host.registrar = partial->registrar;
    s.host.country = partial->country;
    s.host.whois_complete = partial->whois_complete;
  }
  if (s.host.country.empty() && !s.pdns_records.empty()) {
    const auto latest = std::max_element(s.pdns_records.begin(), s.pdns_records.end(),
                                         [](const auto& a, const auto& b) { return a.last_seen < b.last_seen; });
    s.host.country = latest->country;
  }
  if (!is_ipv4_literal(host)) {
    if (suffixes_.size() > 0) {
      s.host.tld = suffixes_.suffix_of(host);
    } else if (auto dot = host.rfind('.'); dot != std::string::npos) {
      s.host.tld = host.substr(dot + 1);
    }
  }

  sanitize(s);
  if (cache_) cache_->store(s);
  return s;
}

std::vector<LabeledSample> Acquirer::build_all(const std::vector<std::pair<std::string, Label>>& items,
                                               const std::function<void(std::size_t, const LabeledSample&)>& progress) {
  std::vector<LabeledSample> out(items.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= items.size()) return;
      out[i] = build_sample(items[i].first, items[i].second);
      if (progress) {
        std::lock_guard lock(progress_mu);
        progress(i, out[i]);
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::max(cfg_.max_concurrency, 1u), items.size());
  std::vector<std::thread> threads;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (std::size_t t = 0; t < n_threads; ++t)
    threads.emplace_back([&] {
      try {
        worker();
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = items.size();
      }
    });
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

LabeledSample build_sample(const std::string& url, Label label, const AcquisitionConfig& cfg,
                           std::shared_ptr<HttpTransport> transport, std::shared_ptr<Resolver> resolver,
                           std::shared_ptr<SampleCache> cache) {
  Acquirer a(cfg, std::move(transport), std::move(resolver), std::move(cache));
  return a.build_sample(url, label);
}

}  // namespace malweb
