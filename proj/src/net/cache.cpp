#include <arpa/inet.h>
#include <netdb.h>
#include <openssl/evp.h>
#include <sys/socket.h>

#include <algorithm>
#include <filesystem>

#include "malweb/acquisition.hpp"
#include "malweb/text.hpp"

namespace malweb {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sanitize_utf8(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = p[i];
    std::size_t len = 0;
    unsigned lo = 0x80, hi = 0xBF;  // bounds for the second byte
    if (c < 0x80) len = 1;
    else if (c >= 0xC2 && c <= 0xDF) len = 2;
    else if (c == 0xE0) { len = 3; lo = 0xA0; }
    else if (c >= 0xE1 && c <= 0xEC) len = 3;
    else if (c == 0xED) { len = 3; hi = 0x9F; }
    else if (c >= 0xEE && c <= 0xEF) len = 3;
    else if (c == 0xF0) { len = 4; lo = 0x90; }
    else if (c >= 0xF1 && c <= 0xF3) len = 4;
    else if (c == 0xF4) { len = 4; hi = 0x8F; }

    std::size_t good = len == 0 ? 0 : 1;
    if (len > 1) {
      while (good < len && i + good < n) {
        const unsigned char b = p[i + good];
        const unsigned l = good == 1 ? lo : 0x80, h = good == 1 ? hi : 0xBF;
        if (b < l || b > h) break;
        ++good;
      }
    }
    if (len != 0 && good == len) {
      out.append(s.substr(i, len));
      i += len;
    } else {
      out += "\xEF\xBF\xBD";
      i += std::max<std::size_t>(good, 1);
    }
  }
  return out;
}

// ---- resolvers -------------------------------------------------------------

std::vector<std::string> SystemResolver::resolve(const std::string& host) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (rc != 0) throw DnsFailure(host + ": " + gai_strerror(rc));
  std::vector<std::string> ips;
  for (addrinfo* a = res; a; a = a->ai_next) {
    char buf[INET6_ADDRSTRLEN] = {};
    const void* addr = a->ai_family == AF_INET
                           ? static_cast<const void*>(&reinterpret_cast<sockaddr_in*>(a->ai_addr)->sin_addr)
                           : static_cast<const void*>(&reinterpret_cast<sockaddr_in6*>(a->ai_addr)->sin6_addr);
    if (::inet_ntop(a->ai_family, addr, buf, sizeof buf)) {
      std::string ip(buf);
      if (std::find(ips.begin(), ips.end(), ip) == ips.end()) ips.push_back(std::move(ip));
    }
  }
  ::freeaddrinfo(res);
  return ips;
}

std::vector<std::string> StaticResolver::resolve(const std::string& host) {
  auto it = table_.find(host);
  if (it == table_.end()) throw DnsFailure(host + ": no such host");
  return it->second;
}

// ---- cache -----------------------------------------------------------------

SampleCache::SampleCache(std::string root) : root_(std::move(root)) {}

std::string SampleCache::path_for(const std::string& url) const {
  const std::string h = sha256_hex(url);
  return (fs::path(root_) / h.substr(0, 2) / (h + ".json")).string();
}

std::mutex& SampleCache::lock_for(const std::string& key) {
  std::lock_guard lock(locks_mu_);
  auto& m = locks_[key];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

std::optional<LabeledSample> SampleCache::load(const std::string& url) const {
  const std::string path = path_for(url);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  try {
    LabeledSample s = load_sample(text::read_file(path));
    if (s.url != url) return std::nullopt;
    return s;
  } catch (const Error&) {
    return std::nullopt;  // unreadable entries are rebuilt
  }
}

void SampleCache::store(const LabeledSample& s) {
  const std::string path = path_for(s.url);
  std::lock_guard lock(lock_for(path));
  std::error_code ec;
  fs::create_directories(fs::path(path).parent_path(), ec);
  if (ec) throw IoError("cache: cannot create " + fs::path(path).parent_path().string() + ": " + ec.message());
  text::write_file_atomic(path, dump_sample(s));
}

std::vector<LabeledSample> SampleCache::load_all() const {
  std::vector<std::string> paths;
  std::error_code ec;
  if (!fs::is_directory(root_, ec)) return {};
  for (const auto& e : fs::recursive_directory_iterator(root_, ec))
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().stem().string().size() == 64 &&
        e.path().parent_path().filename() == e.path().stem().string().substr(0, 2))
      paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  std::vector<LabeledSample> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    try {
      out.push_back(load_sample(text::read_file(p)));
    } catch (const Error& e) {
      throw ParseError("cache entry " + p + ": " + e.what());
    }
  }
  return out;
}

}  // namespace malweb
