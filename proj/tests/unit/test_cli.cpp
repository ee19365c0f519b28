#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "malweb/acquisition.hpp"
#include "malweb/cli.hpp"
#include "malweb/dataset.hpp"

using namespace malweb;
namespace fs = std::filesystem;

namespace {

const std::string kFix = MALWEB_FIXTURES_DIR "/cli";

struct Run {
  int code;
  std::string out, err;
};

Run malweb_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "malweb");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& tag) {
  auto d = fs::temp_directory_path() / ("malweb_cli_" + tag + "_" + std::to_string(std::random_device{}()));
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

Run fetch(const fs::path& cache, const std::string& labels = "labels.txt") {
  return malweb_cli({"fetch", "--urls", kFix + "/urls.txt", "--labels", kFix + "/" + labels, "--cache", cache.string(),
                     "--replay", kFix + "/replay.json", "--config", kFix + "/acquisition.json"});
}

// Nine well-separated classes over the Base columns, with URLs and embeddings.
void separable_csv(const fs::path& dir, std::size_t per_class) {
  FeatureMatrix m;
  m.schema = cascade_subset(schema(), Cascade::Base);
  const std::size_t n = per_class * kLabelCount, d = m.schema.size();
  m.values = Matrix(n, d);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 0.2);
  std::string emb = "url";
  for (std::size_t j = 0; j < 32; ++j) emb += ",e" + std::to_string(j);
  emb += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % kLabelCount;
    m.labels.push_back(all_labels()[c]);
    m.urls.push_back("http://row" + std::to_string(i) + ".test/");
    for (std::size_t j = 0; j < d; ++j) m.values(i, j) = z(rng) + (j == c ? 4.0 : 0.0);
    emb += m.urls.back();
    for (std::size_t j = 0; j < 32; ++j) emb += "," + std::to_string(std::fabs(z(rng)) + (j % kLabelCount == c ? 1.0 : 0.0));
    emb += "\n";
  }
  write_csv(m, (dir / "features.csv").string());
  std::ofstream(dir / "emb.csv") << emb;
  std::ofstream(dir / "model.json") << R"({"gbt": {"n_estimators": 20, "max_depth": 3}})";
}

std::size_t count_prefix(const std::string& csv, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& l : lines(csv))
    if (l.rfind(prefix, 0) == 0) ++n;
  return n;
}

}  // namespace

TEST_CASE("fetch fills the cache from a replay fixture") {
  const auto dir = temp_dir("fetch");
  const Run r = fetch(dir / "cache");
  CHECK(r.code == cli::kOk);
  CHECK(SampleCache((dir / "cache").string()).load_all().size() == 10);
  CHECK(fs::exists(dir / "cache" / "manifest.json"));
  CHECK(r.out.find("fetched 10/10") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("fetch skips unknown labels and rejects empty input") {
  const auto dir = temp_dir("skip");
  const Run r = fetch(dir / "cache", "labels_unknown.txt");
  CHECK(r.code == cli::kOk);
  CHECK(r.err.find("definitely-not-a-label") != std::string::npos);
  CHECK(SampleCache((dir / "cache").string()).load_all().size() == 9);

  std::ofstream(dir / "empty.txt") << "";
  const Run e = malweb_cli({"fetch", "--urls", (dir / "empty.txt").string(), "--labels", (dir / "empty.txt").string(),
                            "--cache", (dir / "c2").string(), "--replay", kFix + "/replay.json"});
  CHECK(e.code != cli::kOk);
  CHECK(malweb_cli({"fetch"}).code == cli::kUsage);
  fs::remove_all(dir);
}

TEST_CASE("assemble writes the requested cascade and is reproducible") {
  const auto dir = temp_dir("assemble");
  REQUIRE(fetch(dir / "cache").code == cli::kOk);
  const std::string data = MALWEB_SOURCE_DIR "/data";
  const auto assemble_to = [&](const std::string& name, const std::string& cascade) {
    return malweb_cli({"assemble", "--cache", (dir / "cache").string(), "--out", (dir / name).string(), "--cascade",
                       cascade, "--data-dir", data});
  };
  REQUIRE(assemble_to("base.csv", "base").code == cli::kOk);
  const std::string csv = slurp(dir / "base.csv");
  const auto rows = lines(csv);
  REQUIRE(rows.size() == 11);
  CHECK(std::count(rows[0].begin(), rows[0].end(), ',') == 27);  // 27 features + label
  CHECK(rows[0].substr(rows[0].rfind(',') + 1) == "label");

  REQUIRE(assemble_to("again.csv", "base").code == cli::kOk);
  CHECK(slurp(dir / "again.csv") == csv);

  REQUIRE(assemble_to("all.csv", "all").code == cli::kOk);
  CHECK(read_csv((dir / "all.csv").string()).schema.size() == schema().size());
  CHECK(assemble_to("x.csv", "c9").code == cli::kUsage);
  fs::remove_all(dir);
}

TEST_CASE("train reports metrics and contributions") {
  const auto dir = temp_dir("train");
  separable_csv(dir, 30);
  const std::string csv = (dir / "features.csv").string();
  const std::string cfg = (dir / "model.json").string();

  const Run r = malweb_cli({"train", "--csv", csv, "--model", "gbt", "--config", cfg, "--folds", "5", "--stratified",
                            "--out", (dir / "gbt").string()});
  REQUIRE(r.code == cli::kOk);
  const auto rep = nlohmann::json::parse(slurp(dir / "gbt" / "report.json"));
  CHECK(rep["metrics"]["summary"]["accuracy"]["mean"].get<double>() >= 0.99);
  CHECK(rep["cascade"] == "base");
  CHECK(fs::exists(dir / "gbt" / "contributions.csv"));
  CHECK(fs::exists(dir / "gbt" / "manifest.json"));
  CHECK(r.out.find("accuracy") != std::string::npos);

  const Run chi = malweb_cli({"train", "--csv", csv, "--config", cfg, "--folds", "3", "--embeddings",
                              (dir / "emb.csv").string(), "--reduce", "chi2:20", "--out", (dir / "chi").string()});
  REQUIRE(chi.code == cli::kOk);
  const std::string contrib = slurp(dir / "chi" / "contributions.csv");
  CHECK(count_prefix(contrib, "emb_chi2_e") == 20);

  const Run lda = malweb_cli({"train", "--csv", csv, "--config", cfg, "--folds", "3", "--embeddings",
                              (dir / "emb.csv").string(), "--reduce", "lda", "--out", (dir / "lda").string()});
  REQUIRE(lda.code == cli::kOk);
  const std::size_t lda_cols = count_prefix(slurp(dir / "lda" / "contributions.csv"), "emb_lda_");
  CHECK(lda_cols >= 1);
  CHECK(lda_cols <= 8);

  // Bad configuration lists every problem and exits with the usage code.
  std::ofstream(dir / "bad.json") << R"({"gbt": {"learning_rate": 0, "colsample_bytree": 2}})";
  const Run bad = malweb_cli({"train", "--csv", csv, "--config", (dir / "bad.json").string(), "--out",
                              (dir / "bad").string()});
  CHECK(bad.code == cli::kUsage);
  CHECK(bad.err.find("learning_rate") != std::string::npos);
  CHECK(bad.err.find("colsample_bytree") != std::string::npos);
  CHECK(malweb_cli({"train", "--csv", (dir / "none.csv").string(), "--out", (dir / "x").string()}).code == cli::kData);
  fs::remove_all(dir);
}
