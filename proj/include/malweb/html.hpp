#pragma once

// Tolerant HTML tokenizer. Only what the content features need: start tags
// with attributes, raw text of <script>/<style>, and tag-name spans.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace malweb::html {

struct Attribute {
  std::string name;  // lowercase
  std::string value;
};

struct Tag {
  std::string name;  // lowercase
  std::vector<Attribute> attributes;
  std::size_t name_begin = 0;  // byte span of the tag name in the document
  std::size_t name_end = 0;
  bool closing = false;
  /// Raw body for <script> and <style> start tags.
  std::string raw_text;

  std::optional<std::string_view> attr(std::string_view key) const;
};

/// Every start and end tag in document order. Comments, doctypes and
/// processing instructions are skipped.
std::vector<Tag> tokenize(std::string_view doc);

/// Resolves `ref` against `base` (absolute http(s) URL). Returns empty for
/// unsupported schemes such as data: or javascript:.
std::string resolve_url(std::string_view base, std::string_view ref);

}  // namespace malweb::html
