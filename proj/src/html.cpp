#include "malweb/html.hpp"

#include "malweb/text.hpp"

namespace malweb::html {

std::optional<std::string_view> Tag::attr(std::string_view key) const {
  for (const auto& a : attributes)
    if (a.name == key) return std::string_view(a.value);
  return std::nullopt;
}

namespace {

bool is_name_char(char c) {
  return !text::is_space(c) && c != '>' && c != '/' && c != '=' && c != '<';
}

// Index of the case-insensitive needle at or after `from`, or npos.
std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.empty()) return from;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i)
    if (text::iequals(hay.substr(i, needle.size()), needle)) return i;
  return std::string_view::npos;
}

}  // namespace

std::vector<Tag> tokenize(std::string_view doc) {
  std::vector<Tag> tags;
  std::size_t i = 0;
  const std::size_t n = doc.size();
  while (i < n) {
    const std::size_t lt = doc.find('<', i);
    if (lt == std::string_view::npos || lt + 1 >= n) break;
    i = lt + 1;

    if (doc.substr(i, 3) == "!--") {
      const auto end = doc.find("-->", i + 3);
      i = end == std::string_view::npos ? n : end + 3;
      continue;
    }
    if (doc[i] == '!' || doc[i] == '?') {
      const auto end = doc.find('>', i);
      i = end == std::string_view::npos ? n : end + 1;
      continue;
    }

    Tag tag;
    if (doc[i] == '/') {
      tag.closing = true;
      ++i;
    }
    if (i >= n || !text::is_alpha(doc[i])) continue;  // stray '<'

    tag.name_begin = i;
    while (i < n && is_name_char(doc[i])) ++i;
    tag.name_end = i;
    tag.name = text::to_lower(doc.substr(tag.name_begin, tag.name_end - tag.name_begin));

    // Attributes until '>'.
    while (i < n && doc[i] != '>') {
      if (text::is_space(doc[i]) || doc[i] == '/') {
        ++i;
        continue;
      }
      const std::size_t an = i;
      while (i < n && is_name_char(doc[i])) ++i;
      if (i == an) {  // lone '=' or '<'
        ++i;
        continue;
      }
      Attribute attr{text::to_lower(doc.substr(an, i - an)), {}};
      std::size_t j = i;
      while (j < n && text::is_space(doc[j])) ++j;
      if (j < n && doc[j] == '=') {
        ++j;
        while (j < n && text::is_space(doc[j])) ++j;
        if (j < n && (doc[j] == '"' || doc[j] == '\'')) {
          const char q = doc[j];
          const auto close = doc.find(q, j + 1);
          const auto stop = close == std::string_view::npos ? n : close;
          attr.value = std::string(doc.substr(j + 1, stop - j - 1));
          j = close == std::string_view::npos ? n : close + 1;
        } else {
          const std::size_t vb = j;
          while (j < n && !text::is_space(doc[j]) && doc[j] != '>') ++j;
          attr.value = std::string(doc.substr(vb, j - vb));
        }
        i = j;
      }
      if (!tag.closing) tag.attributes.push_back(std::move(attr));
    }
    if (i < n) ++i;  // '>'

    if (!tag.closing && (tag.name == "script" || tag.name == "style")) {
      const std::string close = "</" + tag.name;
      const auto end = ifind(doc, close, i);
      const auto stop = end == std::string_view::npos ? n : end;
      tag.raw_text = std::string(doc.substr(i, stop - i));
      i = stop;
    }
    tags.push_back(std::move(tag));
  }
  return tags;
}

std::string resolve_url(std::string_view base, std::string_view ref) {
  ref = text::trim(ref);
  if (ref.empty()) return {};
  if (text::starts_with_icase(ref, "http://") || text::starts_with_icase(ref, "https://"))
    return std::string(ref);

  const auto scheme_end = base.find("://");
  if (scheme_end == std::string_view::npos) return {};
  if (ref.substr(0, 2) == "//") return std::string(base.substr(0, scheme_end)) + ":" + std::string(ref);

  // Any other explicit scheme (data:, javascript:, mailto:) is not fetchable.
  const auto colon = ref.find(':');
  const auto slash = ref.find('/');
  if (colon != std::string_view::npos && (slash == std::string_view::npos || colon < slash)) return {};

  const auto host_end = base.find_first_of("/?#", scheme_end + 3);
  const std::string origin(base.substr(0, host_end));
  if (ref.front() == '/') return origin + std::string(ref);

  std::string_view path = host_end == std::string_view::npos ? std::string_view("/") : base.substr(host_end);
  path = path.substr(0, path.find_first_of("?#"));
  if (path.empty() || path.front() != '/') path = "/";
  const auto last = path.rfind('/');
  return origin + std::string(path.substr(0, last + 1)) + std::string(ref);
}

}  // namespace malweb::html
