#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace malweb::detail {

struct UrlTarget {
  std::string scheme;  // lowercase
  std::string host;    // lowercase, brackets kept for IPv6
  std::string port;    // empty = scheme default
  std::string target;  // path + query, at least "/"

  std::string origin() const { return scheme + "://" + host + (port.empty() ? "" : ":" + port); }
};

/// http(s) only.
std::optional<UrlTarget> split_target(std::string_view url);

/// RFC 3986 unreserved characters pass through, everything else is %XX.
std::string url_encode(std::string_view s);

/// Host of a URL, or the input itself when it is already a bare host.
std::string host_of(std::string_view indicator);

}  // namespace malweb::detail
