#pragma once

#include <stdexcept>
#include <string>

namespace malweb {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnparsableUrl : public Error {
 public:
  explicit UnparsableUrl(const std::string& url)
      : Error("unparsable url: '" + url + "'") {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  SchemaMismatch(const std::string& expected, const std::string& found)
      : Error("schema mismatch: expected [" + expected + "], found [" + found + "]") {}
};

class UnknownLabel : public Error {
 public:
  explicit UnknownLabel(const std::string& raw)
      : Error("unknown label: '" + raw + "'"), raw_(raw) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace malweb
