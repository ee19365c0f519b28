#pragma once

#include <map>
#include <string>
#include <string_view>

#include "malweb/sample.hpp"

namespace malweb {

/// Maps provider-specific tags ("botnet", "c2 server", "malware_download")
/// onto the nine canonical classes. Keys are matched case-insensitively
/// after trimming and collapsing '_'/'-' to spaces. Unknown tags are
/// rejected rather than guessed.
class LabelMapper {
 public:
  /// Mapping that covers the vocabularies of the supported intel providers.
  static LabelMapper defaults();
  /// Defaults extended (or overridden) by a JSON object {"raw": "CanonicalName"}.
  static LabelMapper from_json_text(std::string_view json_text);
  static LabelMapper from_file(const std::string& path);

  void add(std::string_view raw, Label label);
  /// Throws UnknownLabel.
  Label normalize(std::string_view raw) const;
  bool knows(std::string_view raw) const;

 private:
  static std::string key(std::string_view raw);
  std::map<std::string, Label, std::less<>> table_;
};

/// normalize_label with the default mapping.
Label normalize_label(std::string_view raw);

}  // namespace malweb
