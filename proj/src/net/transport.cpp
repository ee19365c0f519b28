#include <httplib.h>

#include <netdb.h>
#include <sys/socket.h>

#include <chrono>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "malweb/acquisition.hpp"
#include "malweb/text.hpp"
#include "net_internal.hpp"

namespace malweb {

namespace detail {

std::optional<UrlTarget> split_target(std::string_view url) {
  const auto colon = url.find("://");
  if (colon == std::string_view::npos) return std::nullopt;
  UrlTarget t;
  t.scheme = text::to_lower(url.substr(0, colon));
  if (t.scheme != "http" && t.scheme != "https") return std::nullopt;
  std::string_view rest = url.substr(colon + 3);
  const auto slash = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, slash);
  std::string_view tail = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    t.host = std::string(authority.substr(0, close + 1));
    if (close + 1 < authority.size() && authority[close + 1] == ':') t.port = std::string(authority.substr(close + 2));
  } else {
    const auto pc = authority.rfind(':');
    t.host = text::to_lower(authority.substr(0, pc));
    if (pc != std::string_view::npos) t.port = std::string(authority.substr(pc + 1));
  }
  if (t.host.empty()) return std::nullopt;
  for (char c : t.port)
    if (!text::is_digit(c)) return std::nullopt;
  if (const auto hash = tail.find('#'); hash != std::string_view::npos) tail = tail.substr(0, hash);
  t.target = tail.empty() || tail.front() != '/' ? "/" + std::string(tail) : std::string(tail);
  return t;
}

std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (text::is_alpha(static_cast<char>(c)) || text::is_digit(static_cast<char>(c)) || c == '-' || c == '.' ||
        c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::string host_of(std::string_view indicator) {
  if (auto t = split_target(indicator)) {
    std::string h = t->host;
    if (h.size() > 2 && h.front() == '[') h = h.substr(1, h.size() - 2);
    return h;
  }
  std::string_view s = text::trim(indicator);
  if (const auto p = s.find_first_of("/?#"); p != std::string_view::npos) s = s.substr(0, p);
  if (const auto p = s.rfind(':'); p != std::string_view::npos && s.find(':') == p) s = s.substr(0, p);
  return text::to_lower(s);
}

}  // namespace detail

std::optional<std::string> HttpResponse::header(std::string_view name) const {
  auto it = headers.find(text::to_lower(name));
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

namespace {

bool host_resolves(const std::string& host) {
  std::string h = host;
  if (h.size() > 2 && h.front() == '[') h = h.substr(1, h.size() - 2);
  addrinfo hints{};
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(h.c_str(), nullptr, &hints, &res);
  if (res) ::freeaddrinfo(res);
  return rc == 0;
}

}  // namespace

HttpResponse NetTransport::send(const HttpRequest& req, const TransportLimits& limits) {
  const auto t = detail::split_target(req.url);
  if (!t) throw ConnectionFailed("unsupported url: " + req.url);

  httplib::Client cli(t->origin());
  const auto timeout = std::chrono::duration<double>(limits.timeout_s);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_follow_location(false);
  cli.enable_server_certificate_verification(limits.verify_tls);

  httplib::Request hr;
  hr.method = req.method;
  hr.path = t->target;
  hr.headers.emplace("User-Agent", limits.user_agent);
  for (const auto& [k, v] : req.headers) hr.headers.emplace(k, v);
  if (!req.body.empty() || req.method == "POST") {
    hr.body = req.body;
    hr.headers.emplace("Content-Type", req.content_type.empty() ? "application/octet-stream" : req.content_type);
  }

  HttpResponse out;
  hr.content_receiver = [&](const char* data, std::size_t n, std::uint64_t, std::uint64_t) {
    const std::size_t room = limits.max_body_size - out.body.size();
    if (n > room) {
      out.body.append(data, room);
      out.truncated = true;
      return false;
    }
    out.body.append(data, n);
    return true;
  };

  httplib::Response res;
  httplib::Error err = httplib::Error::Success;
  const auto start = std::chrono::steady_clock::now();
  const bool ok = cli.send(hr, res, err);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!ok && !(err == httplib::Error::Canceled && out.truncated)) {
    const std::string what = req.url + ": " + httplib::to_string(err);
    switch (err) {
      case httplib::Error::ConnectionTimeout:
        throw Timeout(what);
      case httplib::Error::Read:
      case httplib::Error::Write:
        if (elapsed >= limits.timeout_s * 0.9) throw Timeout(what);
        throw ConnectionFailed(what);
      case httplib::Error::Connection:
        if (!host_resolves(t->host)) throw DnsFailure(req.url + ": cannot resolve " + t->host);
        throw ConnectionFailed(what);
      default:
        throw ConnectionFailed(what);
    }
  }
  out.status = res.status;
  for (const auto& [k, v] : res.headers) out.headers.emplace(text::to_lower(k), v);
  return out;
}

// ---- replay ---------------------------------------------------------------

std::shared_ptr<ReplayTransport> ReplayTransport::from_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

std::shared_ptr<ReplayTransport> ReplayTransport::from_json(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_array()) throw ParseError("replay fixture: expected a JSON array");
  auto rt = std::make_shared<ReplayTransport>();
  try {
    for (const auto& item : j) {
      Entry e;
      e.method = item.value("method", "GET");
      e.url = item.at("url").get<std::string>();
      if (item.contains("request_body")) e.request_body = item["request_body"].get<std::string>();
      e.error = item.value("error", "");
      e.response.status = item.value("status", 200);
      if (item.contains("headers"))
        for (const auto& [k, v] : item["headers"].items()) e.response.headers[text::to_lower(k)] = v.get<std::string>();
      if (item.contains("body_json")) {
        e.response.body = item["body_json"].dump();
      } else if (item.contains("body_file")) {
        e.response.body = text::read_file((std::filesystem::path(base_dir) / item["body_file"].get<std::string>()).string());
      } else {
        e.response.body = item.value("body", "");
      }
      rt->add(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("replay fixture: ") + e.what());
  }
  return rt;
}

void ReplayTransport::add(Entry e) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(e));
}

void ReplayTransport::add(std::string method, std::string url, int status, std::string body,
                          std::map<std::string, std::string> headers) {
  Entry e;
  e.method = std::move(method);
  e.url = std::move(url);
  e.response.status = status;
  e.response.body = std::move(body);
  for (auto& [k, v] : headers) e.response.headers[text::to_lower(k)] = v;
  add(std::move(e));
}

void ReplayTransport::fail(std::string method, std::string url, std::string error) {
  Entry e;
  e.method = std::move(method);
  e.url = std::move(url);
  e.error = std::move(error);
  add(std::move(e));
}

HttpResponse ReplayTransport::send(const HttpRequest& req, const TransportLimits& limits) {
  ++calls_;
  const Entry* hit = nullptr;
  {
    std::lock_guard lock(mu_);
    log_.push_back(req.method + " " + req.url);
    for (const auto& e : entries_) {
      if (!text::iequals(e.method, req.method) || e.url != req.url) continue;
      if (e.request_body && *e.request_body != req.body) continue;
      hit = &e;
      break;
    }
  }
  if (!hit) {
    HttpResponse r;
    r.status = 404;
    return r;
  }
  if (hit->error == "timeout") throw Timeout(req.url + ": timed out (replay)");
  if (hit->error == "dns") throw DnsFailure(req.url + ": cannot resolve (replay)");
  if (!hit->error.empty()) throw ConnectionFailed(req.url + ": " + hit->error + " (replay)");
  HttpResponse r = hit->response;
  if (r.body.size() > limits.max_body_size) {
    r.body.resize(limits.max_body_size);
    r.truncated = true;
  }
  return r;
}

std::vector<std::string> ReplayTransport::requested_urls() const {
  std::lock_guard lock(mu_);
  return log_;
}

}  // namespace malweb
