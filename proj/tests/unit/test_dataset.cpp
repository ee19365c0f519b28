#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "malweb/dataset.hpp"
#include "malweb/error.hpp"
#include "synthetic.hpp"

using namespace malweb;
namespace fs = std::filesystem;

namespace {

ExtractionResources resources() {
  ExtractionResources r;
  r.suffixes = PublicSuffixList::from_file(MALWEB_FIXTURES_DIR "/psl_small.dat");
  r.pricing = TldPricing::from_csv_text(
      "tld,register_usd,renew_usd,transfer_usd,icann_fee_usd\ncom,9.77,9.77,9.77,0.18\n");
  return r;
}

LabeledSample sample(const std::string& url, Label label, bool robots) {
  LabeledSample s;
  s.url = url;
  s.label = label;
  s.page.final_url = url;
  s.page.https = url.rfind("https", 0) == 0;
  s.page.html = "<html><script>eval(1)</script><img src='http://cdn.other.org/x.png'></html>";
  if (robots) s.page.robots_body = "User-agent: *\nDisallow: /\n";
  s.pdns_records = {{"a.example.com", "1.1.1.1", "AS1", "US", 1, 2}, {"a.example.com", "2.2.2.2", "AS2", "DE", 3, 4}};
  s.host.tld = url.find(".org") != std::string::npos ? "org" : "com";
  s.host.country = "US";
  s.host.registrar = "Reg";
  s.host.resolved_ips = {"1.1.1.1"};
  return s;
}

fs::path temp_dir() {
  auto d = fs::temp_directory_path() / ("malweb_dataset_" + std::to_string(std::random_device{}()));
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("schema shape and nesting") {
  const FeatureSchema& s = schema();
  CHECK(s.size() == 76);
  std::set<std::string> names;
  for (const auto& f : s.features()) names.insert(f.name);
  CHECK(names.size() == s.size());

  const std::map<Cascade, std::size_t> expected = {
      {Cascade::Base, 27}, {Cascade::C1, 35}, {Cascade::C2, 60}, {Cascade::C3, 67}, {Cascade::HostAll, 76}};
  std::size_t prev = 0;
  std::vector<std::string> prev_names;
  for (const auto& [c, n] : expected) {
    const FeatureSchema sub = cascade_subset(s, c);
    CHECK(sub.size() == n);
    CHECK(sub.size() > prev);
    // Prefix nesting.
    const auto names_c = sub.names();
    CHECK(std::equal(prev_names.begin(), prev_names.end(), names_c.begin()));
    prev = sub.size();
    prev_names = names_c;
  }
  for (const auto& f : cascade_subset(s, Cascade::Base).features()) CHECK(f.cascade == Cascade::Base);
  CHECK(parse_cascade("ALL") == Cascade::HostAll);
  CHECK(parse_cascade("c2") == Cascade::C2);
  CHECK_FALSE(parse_cascade("c9").has_value());
}

TEST_CASE("assemble examples") {
  const auto res = resources();
  const std::vector<LabeledSample> samples = {sample("https://a.example.com/x", Label::Phishing, true),
                                              sample("http://b.example.com/", Label::Benign, false),
                                              sample("http://c.example.org/", Label::Spam, true)};
  const FeatureMatrix m = assemble(samples, schema(), res);
  CHECK(m.values.rows() == 3);
  CHECK(m.values.cols() == schema().size());
  CHECK(m.labels == std::vector<Label>{Label::Phishing, Label::Benign, Label::Spam});
  for (double v : m.values.data()) CHECK(std::isfinite(v));

  // Sample 1 has no robots.txt: all eight C1 cells are zero.
  for (const auto& f : schema().features())
    if (f.cascade == Cascade::C1) CHECK(m.values(1, *schema().index_of(f.name)) == 0.0);

  // Shared tld, shared encoding; the org sample differs.
  const std::size_t tld = *schema().index_of("tld");
  CHECK(m.values(0, tld) == m.values(1, tld));
  CHECK(m.values(0, tld) == doctest::Approx(2.0 / 3.0));
  CHECK(m.values(2, tld) == doctest::Approx(1.0 / 3.0));

  // Unknown pricing for org is the sentinel; com comes from the table.
  const std::size_t reg = *schema().index_of("tld_register_usd");
  CHECK(m.values(0, reg) == doctest::Approx(9.77));
  CHECK(m.values(2, reg) == -1.0);

  // Parallel extraction gives the same matrix.
  const FeatureMatrix par = assemble(samples, schema(), res, 3);
  CHECK(par.values == m.values);
  CHECK(par.warnings == m.warnings);
  CHECK_THROWS_AS(assemble({}, schema(), res), InvalidArgument);
}

TEST_CASE("frequency encoder") {
  FrequencyEncoder e;
  e.fit({"a", "b", "a", "c"});
  CHECK(e.encode("a") == 0.5);
  CHECK(e.encode("c") == 0.25);
  CHECK(e.encode("zzz") == 0.0);
}

TEST_CASE("csv round trip and header checks") {
  const auto dir = temp_dir();
  testing::SyntheticConfig sc;
  sc.n = 60;
  auto corpus = testing::make_synthetic(sc);
  FeatureMatrix m = corpus.matrix;
  const std::string path = (dir / "f.csv").string();
  write_csv(m, path);
  CHECK(fs::exists(sidecar_path(path)));

  const FeatureMatrix back = read_csv(path);
  CHECK(back.schema == m.schema);
  CHECK(back.labels == m.labels);
  CHECK(back.urls == m.urls);
  REQUIRE(back.values.rows() == m.values.rows());
  for (std::size_t i = 0; i < m.values.data().size(); ++i) {
    const double a = m.values.data()[i], b = back.values.data()[i];
    CHECK(std::fabs(a - b) <= 1e-11 * std::max(1.0, std::fabs(a)));
  }

  // Writing what was read gives the same bytes.
  const std::string again = (dir / "g.csv").string();
  write_csv(back, again);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  CHECK(slurp(path) == slurp(again));

  // Swap two header fields.
  std::string text = slurp(path);
  const auto nl = text.find('\n');
  std::string header = text.substr(0, nl);
  const auto c1 = header.find(',');
  const auto c2 = header.find(',', c1 + 1);
  header = header.substr(c1 + 1, c2 - c1 - 1) + "," + header.substr(0, c1) + header.substr(c2);
  const std::string bad = (dir / "bad.csv").string();
  std::ofstream(bad, std::ios::binary) << header << text.substr(nl);
  CHECK_THROWS_AS(read_csv(bad), SchemaMismatch);

  // A cascade subset is a valid header.
  FeatureMatrix base;
  base.schema = cascade_subset(schema(), Cascade::Base);
  base.values = testing::cascade_columns(m, Cascade::Base);
  base.labels = m.labels;
  base.urls = m.urls;
  const std::string bp = (dir / "base.csv").string();
  write_csv(base, bp);
  CHECK(read_csv(bp).schema.size() == 27);
  CHECK_THROWS_AS(read_csv(bp, schema().names()), SchemaMismatch);
  CHECK_THROWS_AS(read_csv((dir / "missing.csv").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("stratified folds: exact proportions") {
  std::vector<int> y(90, 0);
  y.resize(100, 1);
  const FoldPlan p = stratified_kfold(y, 10, 42);
  CHECK(p.stratified);
  for (std::size_t f = 0; f < 10; ++f) {
    std::size_t a = 0, b = 0;
    for (std::size_t i : p.test_indices(f)) (y[i] == 0 ? a : b)++;
    CHECK(a == 9);
    CHECK(b == 1);
  }
  CHECK(stratified_kfold(y, 10, 42).assignments == p.assignments);
  CHECK(stratified_kfold(y, 10, 43).assignments != p.assignments);
}

TEST_CASE("stratified folds: small class spread round-robin") {
  std::vector<Label> y(100, Label::Benign);
  for (int i = 0; i < 12; ++i) y.push_back(Label::CreditCardSkimmer);
  const FoldPlan p = stratified_kfold(y, 10, 1);
  std::vector<std::size_t> per_fold(10, 0);
  for (std::size_t i = 100; i < y.size(); ++i) per_fold[p.assignments[i]]++;
  std::multiset<std::size_t> sizes(per_fold.begin(), per_fold.end());
  CHECK(sizes == std::multiset<std::size_t>{1, 1, 1, 1, 1, 1, 1, 1, 2, 2});

  std::vector<int> tiny = {0, 0, 0, 0, 0, 1};
  const FoldPlan t = stratified_kfold(tiny, 3, 1);
  CHECK_FALSE(t.warnings.empty());
}

TEST_CASE("fold plans partition the rows") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20 + rng() % 200, k = 2 + rng() % 9, classes = 2 + rng() % 8;
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng() % classes);
    for (const FoldPlan& p : {stratified_kfold(y, k, trial), kfold(n, k, trial)}) {
      std::vector<int> seen(n, 0);
      for (std::size_t f = 0; f < k; ++f) {
        const auto test = p.test_indices(f);
        CHECK_FALSE(test.empty());
        for (std::size_t i : test) seen[i]++;
        CHECK(test.size() + p.train_indices(f).size() == n);
      }
      for (int s : seen) CHECK(s == 1);
    }
    // Per-class fold counts differ by at most one.
    const FoldPlan p = stratified_kfold(y, k, trial);
    for (std::size_t c = 0; c < classes; ++c) {
      std::vector<std::size_t> cnt(k, 0);
      for (std::size_t i = 0; i < n; ++i)
        if (y[i] == static_cast<int>(c)) cnt[p.assignments[i]]++;
      const auto [lo, hi] = std::minmax_element(cnt.begin(), cnt.end());
      CHECK(*hi - *lo <= 1);
    }
  }
  CHECK_THROWS_AS(kfold(5, 1, 0), InvalidArgument);
  CHECK_THROWS_AS(kfold(5, 6, 0), InvalidArgument);
}
