#pragma once

// Batch front end: fetch -> assemble -> train.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace malweb::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,    // bad flags or config
  kData = 2,     // unreadable or invalid inputs
  kPartial = 3,  // too many per-item failures
};

/// One per output directory, written last.
struct RunManifest {
  std::string command;
  std::string config_digest;  // sha256 of the canonical config JSON
  std::string schema_version;
  std::uint64_t seed = 42;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::map<std::string, double> timings;  // seconds
  std::vector<std::string> warnings;
  std::string created_at;  // UTC, ISO 8601

  nlohmann::json to_json() const;
};

std::string default_data_dir();

/// argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace malweb::cli
