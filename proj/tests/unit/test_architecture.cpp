#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

// Feature extraction and modelling must stay offline: only src/net and the
// CLI may reach the network layer.
TEST_CASE("feature and model sources never include the network layer") {
  const fs::path root = MALWEB_SOURCE_DIR;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(root / "src"))
    if (e.is_regular_file()) files.push_back(e.path());
  for (const auto& e : fs::directory_iterator(root / "include" / "malweb"))
    if (e.is_regular_file() && e.path().filename() != "acquisition.hpp") files.push_back(e.path());
  REQUIRE(files.size() > 10);

  for (const auto& f : files) {
    std::ifstream in(f);
    std::ostringstream s;
    s << in.rdbuf();
    const std::string text = s.str();
    INFO(f.string());
    CHECK(text.find("httplib") == std::string::npos);
    CHECK(text.find("malweb/acquisition.hpp") == std::string::npos);
    CHECK(text.find("net_internal") == std::string::npos);
    CHECK(text.find("<sys/socket.h>") == std::string::npos);
  }
}
