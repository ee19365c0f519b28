#include <chrono>
#include <set>

#include <nlohmann/json.hpp>

#include "malweb/acquisition.hpp"
#include "malweb/html.hpp"
#include "malweb/text.hpp"
#include "net_internal.hpp"

namespace malweb {

FetchConfig FetchConfig::from_json(const nlohmann::json& j) {
  FetchConfig c;
  if (!j.is_object()) throw ParseError("fetch config: expected an object");
  std::vector<std::string> problems;
  for (const auto& [k, v] : j.items()) {
    try {
      if (k == "timeout_s") c.timeout_s = v.get<double>();
      else if (k == "max_body_size") c.max_body_size = v.get<std::size_t>();
      else if (k == "max_assets") c.max_assets = v.get<std::size_t>();
      else if (k == "max_redirects") c.max_redirects = v.get<std::size_t>();
      else if (k == "user_agent") c.user_agent = v.get<std::string>();
      else if (k == "verify_tls") c.verify_tls = v.get<bool>();
      else problems.push_back("fetch." + k + ": unknown key");
    } catch (const nlohmann::json::exception&) {
      problems.push_back("fetch." + k + ": wrong type");
    }
  }
  if (!(c.timeout_s > 0.0)) problems.push_back("fetch.timeout_s: must be > 0");
  if (!problems.empty()) throw ParseError(text::join(problems, "; "));
  return c;
}

nlohmann::json FetchConfig::to_json() const {
  return {{"timeout_s", timeout_s},         {"max_body_size", max_body_size}, {"max_assets", max_assets},
          {"max_redirects", max_redirects}, {"user_agent", user_agent},       {"verify_tls", verify_tls}};
}

AssetRefs find_asset_refs(std::string_view html_text, std::string_view base_url) {
  AssetRefs out;
  std::set<std::string> seen_js, seen_css;
  for (const auto& tag : html::tokenize(html_text)) {
    if (tag.closing) continue;
    if (tag.name == "script") {
      auto src = tag.attr("src");
      if (!src) continue;
      std::string u = html::resolve_url(base_url, text::trim(*src));
      if (!u.empty() && seen_js.insert(u).second) out.js.push_back(std::move(u));
    } else if (tag.name == "link") {
      auto rel = tag.attr("rel");
      auto href = tag.attr("href");
      if (!rel || !href) continue;
      bool stylesheet = false;
      for (auto part : text::split(text::to_lower(*rel), ' '))
        if (part == "stylesheet") stylesheet = true;
      if (!stylesheet) continue;
      std::string u = html::resolve_url(base_url, text::trim(*href));
      if (!u.empty() && seen_css.insert(u).second) out.css.push_back(std::move(u));
    }
  }
  return out;
}

namespace {

bool is_redirect(int status) {
  return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

std::string describe(const std::exception& e) {
  if (dynamic_cast<const Timeout*>(&e)) return std::string("Timeout: ") + e.what();
  if (dynamic_cast<const DnsFailure*>(&e)) return std::string("DnsFailure: ") + e.what();
  if (dynamic_cast<const HttpError*>(&e))
    return "HttpError(" + std::to_string(static_cast<const HttpError&>(e).status()) + "): " + e.what();
  return std::string("ConnectionFailed: ") + e.what();
}

struct Got {
  std::string url;
  HttpResponse res;
};

// GET with redirect following. Throws NetworkError subclasses.
Got get_following(std::string url, const FetchConfig& cfg, HttpTransport& transport, const TransportLimits& lim) {
  for (std::size_t hops = 0;; ++hops) {
    HttpRequest req;
    req.url = url;
    HttpResponse res = transport.send(req, lim);
    if (is_redirect(res.status)) {
      auto loc = res.header("location");
      if (!loc) throw HttpError(res.status, url);
      if (hops >= cfg.max_redirects) throw HttpError(res.status, url + " (too many redirects)");
      std::string next = html::resolve_url(url, text::trim(*loc));
      if (next.empty()) throw HttpError(res.status, url + " (unusable redirect target)");
      url = std::move(next);
      continue;
    }
    return {url, std::move(res)};
  }
}

}  // namespace

FetchedPage fetch_page(const std::string& url, const FetchConfig& cfg, HttpTransport& transport) {
  const auto start = detail::split_target(url);
  if (!start) throw UnparsableUrl(url);

  TransportLimits lim;
  lim.timeout_s = cfg.timeout_s;
  lim.max_body_size = cfg.max_body_size;
  lim.user_agent = cfg.user_agent;
  lim.verify_tls = cfg.verify_tls;

  FetchedPage page;
  page.final_url = url;
  page.fetched_at = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
  try {
    Got got = get_following(url, cfg, transport, lim);
    page.final_url = got.url;
    if (got.res.status < 200 || got.res.status >= 300) throw HttpError(got.res.status, got.url);
    page.html = std::move(got.res.body);
    if (got.res.truncated) {
      page.truncated = true;
      page.errors.push_back("TooLarge: body cut at " + std::to_string(cfg.max_body_size) + " bytes");
    }
  } catch (const NetworkError& e) {
    page.html.clear();
    page.errors.push_back(describe(e));
  }
  const auto final_t = detail::split_target(page.final_url);
  page.https = final_t && final_t->scheme == "https";

  if (!page.html.empty()) {
    const AssetRefs refs = find_asset_refs(page.html, page.final_url);
    std::size_t budget = cfg.max_assets;
    auto pull = [&](const std::vector<std::string>& urls, std::vector<Asset>& dst, const char* kind) {
      for (const auto& u : urls) {
        if (budget == 0) return;
        --budget;
        try {
          Got got = get_following(u, cfg, transport, lim);
          if (got.res.status < 200 || got.res.status >= 300) throw HttpError(got.res.status, got.url);
          dst.push_back({u, std::move(got.res.body)});
        } catch (const NetworkError& e) {
          page.errors.push_back(std::string(kind) + " " + describe(e));
        }
      }
    };
    pull(refs.js, page.external_js, "asset");
    pull(refs.css, page.external_css, "asset");
  }

  if (final_t) {
    try {
      Got got = get_following(final_t->origin() + "/robots.txt", cfg, transport, lim);
      if (got.res.status >= 200 && got.res.status < 300) page.robots_body = std::move(got.res.body);
    } catch (const NetworkError& e) {
      page.errors.push_back("robots " + describe(e));
    }
  }
  return page;
}

}  // namespace malweb
