#include "malweb/labels.hpp"

#include <nlohmann/json.hpp>

#include "malweb/error.hpp"
#include "malweb/text.hpp"

namespace malweb {

std::string LabelMapper::key(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char c : text::trim(raw)) {
    if (c == '_' || c == '-' || text::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

LabelMapper LabelMapper::defaults() {
  LabelMapper m;
  for (Label l : all_labels()) m.add(label_name(l), l);

  const std::pair<const char*, Label> table[] = {
      {"benign", Label::Benign},
      {"clean", Label::Benign},
      {"phishing", Label::Phishing},
      {"phishing urls", Label::Phishing},
      {"phishing url", Label::Phishing},
      {"phish", Label::Phishing},
      {"botnet", Label::CommandAndControl},
      {"c2", Label::CommandAndControl},
      {"c2 server", Label::CommandAndControl},
      {"c&c", Label::CommandAndControl},
      {"cnc", Label::CommandAndControl},
      {"botnet cc", Label::CommandAndControl},
      {"botnet c&c server", Label::CommandAndControl},
      {"botnet command and control server", Label::CommandAndControl},
      {"command and control", Label::CommandAndControl},
      {"command and control server", Label::CommandAndControl},
      {"cobalt strike", Label::CommandAndControl},
      {"cobaltstrike", Label::CommandAndControl},
      {"spam", Label::Spam},
      {"spam urls", Label::Spam},
      {"spam url", Label::Spam},
      {"malware download", Label::MalwareHosting},
      {"payload", Label::MalwareHosting},
      {"payload delivery", Label::MalwareHosting},
      {"malware", Label::MalwareHosting},
      {"malware hosting", Label::MalwareHosting},
      {"malware distribution", Label::MalwareHosting},
      {"malware urls", Label::MalwareHosting},
      {"malicious advertisement hosting", Label::MaliciousAdHosting},
      {"malicious advertisement", Label::MaliciousAdHosting},
      {"malvertising", Label::MaliciousAdHosting},
      {"malicious ads", Label::MaliciousAdHosting},
      {"host scanner", Label::HostScanner},
      {"host scanners", Label::HostScanner},
      {"scanning host", Label::HostScanner},
      {"scanner", Label::HostScanner},
      {"exploit kit", Label::ExploitKit},
      {"exploit kits", Label::ExploitKit},
      {"exploitkit", Label::ExploitKit},
      {"credit card skimmer", Label::CreditCardSkimmer},
      {"credit card skimmers", Label::CreditCardSkimmer},
      {"skimmer", Label::CreditCardSkimmer},
      {"magecart", Label::CreditCardSkimmer},
  };
  for (const auto& [raw, label] : table) m.add(raw, label);
  return m;
}

LabelMapper LabelMapper::from_json_text(std::string_view json_text) {
  LabelMapper m = defaults();
  try {
    const auto j = nlohmann::json::parse(json_text);
    for (const auto& [raw, value] : j.items()) {
      const auto name = value.get<std::string>();
      const auto label = label_from_name(name);
      if (!label) throw ParseError("label map: '" + name + "' is not a canonical class name");
      m.add(raw, *label);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("label map: ") + e.what());
  }
  return m;
}

LabelMapper LabelMapper::from_file(const std::string& path) { return from_json_text(text::read_file(path)); }

void LabelMapper::add(std::string_view raw, Label label) { table_[key(raw)] = label; }

Label LabelMapper::normalize(std::string_view raw) const {
  const auto it = table_.find(key(raw));
  if (it == table_.end()) throw UnknownLabel(std::string(raw));
  return it->second;
}

bool LabelMapper::knows(std::string_view raw) const { return table_.count(key(raw)) > 0; }

Label normalize_label(std::string_view raw) {
  static const LabelMapper mapper = LabelMapper::defaults();
  return mapper.normalize(raw);
}

}  // namespace malweb
