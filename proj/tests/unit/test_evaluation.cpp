#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "malweb/evaluation.hpp"
#include "synthetic.hpp"

using namespace malweb;

namespace {

CvData separable(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 0.3);
  CvData d;
  d.features = Matrix(n, k);
  d.n_classes = k;
  for (std::size_t i = 0; i < n; ++i) {
    d.labels.push_back(static_cast<int>(i % k));
    for (std::size_t j = 0; j < k; ++j) d.features(i, j) = z(rng) + (j == i % k ? 5.0 : 0.0);
  }
  d.feature_names.assign(k, "");
  for (std::size_t j = 0; j < k; ++j) d.feature_names[j] = "f" + std::to_string(j);
  return d;
}

ModelSpec small_gbt() {
  ModelSpec s;
  s.kind = ModelKind::Gbt;
  s.gbt.n_estimators = 10;
  s.gbt.max_depth = 3;
  return s;
}

}  // namespace

TEST_CASE("cross-validation is deterministic and job-count independent") {
  const CvData d = separable(180, 3, 1);
  const FoldPlan plan = stratified_kfold(d.labels, 5, 42);
  const FoldReport a = cross_validate(small_gbt(), d, plan);
  const FoldReport b = cross_validate(small_gbt(), d, plan);
  const FoldReport c = cross_validate(small_gbt(), d, plan, {}, 3);
  for (auto name : kMetricNames) {
    CHECK(a.per_fold(name) == b.per_fold(name));
    CHECK(a.per_fold(name) == c.per_fold(name));
  }
  CHECK(a.folds.size() == 5);
}

TEST_CASE("reported mean and std match the per-fold values") {
  const CvData d = separable(200, 4, 2);
  ModelSpec s;
  s.kind = ModelKind::LogReg;
  const FoldReport r = cross_validate(s, d, kfold(200, 5, 3));
  for (auto name : kMetricNames) {
    const auto v = r.per_fold(name);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    CHECK(r.summary(name).mean == doctest::Approx(mean));
    CHECK(r.summary(name).std == doctest::Approx(sd));
  }
}

TEST_CASE("every model reaches the ceiling on separable nine-class data") {
  const CvData d = separable(450, 9, 3);
  const FoldPlan plan = stratified_kfold(d.labels, 5, 42);
  for (ModelKind kind : {ModelKind::LogReg, ModelKind::Forest, ModelKind::Gbt}) {
    ModelSpec s;
    s.kind = kind;
    s.forest.n_trees = 20;
    s.gbt.n_estimators = 20;
    CHECK(cross_validate(s, d, plan).summary("accuracy").mean >= 0.99);
  }
}

TEST_CASE("fold failures carry the fold index") {
  const CvData d = separable(30, 3, 4);
  FoldPlan plan;
  plan.k = 3;
  for (std::size_t i = 0; i < 30; ++i) plan.assignments.push_back(i % 2);  // fold 2 is empty
  try {
    cross_validate(small_gbt(), d, plan);
    FAIL("expected a fold error");
  } catch (const FoldError& e) {
    CHECK(e.fold() == 2);
  }
  ModelSpec bad = small_gbt();
  bad.gbt.learning_rate = -1;
  CHECK_THROWS_AS(cross_validate(bad, d, kfold(30, 3, 1)), InvalidConfig);
}

TEST_CASE("reducer column names and fit isolation") {
  testing::SyntheticConfig sc;
  sc.n = 300;
  const auto corpus = testing::make_synthetic(sc);

  EmbeddingReducer chi(ReductionSpec::parse("chi2:5"));
  chi.fit(corpus.embeddings, corpus.labels);
  CHECK(chi.column_names().size() == 6);
  CHECK(chi.column_names().back() == "emb_mean");
  for (std::size_t i = 0; i < 5; ++i) CHECK(chi.column_names()[i].rfind("emb_chi2_e", 0) == 0);
  CHECK(chi.transform(corpus.embeddings).cols() == 6);

  EmbeddingReducer lda(ReductionSpec::parse("lda"));
  lda.fit(corpus.embeddings, corpus.labels);
  CHECK(lda.column_names().size() == 9);  // 8 components + mean
  CHECK(lda.column_names()[0] == "emb_lda_1");

  ReductionSpec mean_only;
  mean_only.summary = EmbeddingSummary::Mean;
  EmbeddingReducer m(mean_only);
  m.fit(corpus.embeddings, corpus.labels);
  CHECK(m.column_names() == std::vector<std::string>{"emb_mean"});

  // A reducer fitted on part of the rows transforms rows it never saw.
  std::vector<std::size_t> half(150);
  std::iota(half.begin(), half.end(), 0);
  std::vector<int> yh(corpus.labels.begin(), corpus.labels.begin() + 150);
  EmbeddingReducer part(ReductionSpec::parse("chi2:5"));
  part.fit(corpus.embeddings.select_rows(half), yh);
  const Matrix t = part.transform(corpus.embeddings);
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(t(i, j) >= 0.0);
      CHECK(t(i, j) <= 1.0);
    }
}

TEST_CASE("reduction spec parsing") {
  CHECK(ReductionSpec::parse("none").kind == ReductionKind::None);
  CHECK(ReductionSpec::parse("LDA").kind == ReductionKind::Lda);
  const ReductionSpec c = ReductionSpec::parse("chi2:20");
  CHECK(c.kind == ReductionKind::Chi2);
  CHECK(c.chi2_k == 20);
  CHECK(c.to_string() == "chi2:20");
  CHECK_THROWS_AS(ReductionSpec::parse("chi2:0"), InvalidArgument);
  CHECK_THROWS_AS(ReductionSpec::parse("chi2:x"), InvalidArgument);
  CHECK_THROWS_AS(ReductionSpec::parse("pca"), InvalidArgument);
}

TEST_CASE("model config parsing") {
  const ModelSpec s = parse_model_config(nlohmann::json::parse(
      R"({"model": "rf", "seed": 7, "rf": {"n_trees": 5, "criterion": "entropy"}, "gbt": {"booster": "standard"}})"));
  CHECK(s.kind == ModelKind::Forest);
  CHECK(s.forest.n_trees == 5);
  CHECK(s.forest.criterion == Criterion::Entropy);
  CHECK(s.forest.seed == 7);
  CHECK(s.gbt.booster == Booster::Standard);
  CHECK(s.gbt.n_estimators == 165);

  try {
    parse_model_config(nlohmann::json::parse(R"({"gbt": {"learning_rate": -1, "bogus": 1}, "extra": 0})"));
    FAIL("expected InvalidConfig");
  } catch (const InvalidConfig& e) {
    CHECK(e.problems().size() >= 3);
  }

  // Round trip through JSON.
  const ModelSpec back = parse_model_config(model_spec_to_json(s));
  CHECK(model_spec_to_json(back) == model_spec_to_json(s));
}

TEST_CASE("contributions") {
  // One informative column: a single split takes all the gain.
  Matrix x(40, 3, 0.0);
  std::vector<int> y;
  for (std::size_t i = 0; i < 40; ++i) {
    y.push_back(static_cast<int>(i % 2));
    x(i, 1) = static_cast<double>(i % 2);
  }
  GbtConfig c;
  c.n_estimators = 1;
  c.max_depth = 1;
  Gbt g(c);
  g.fit(x, y, 2);
  const ContributionReport r = feature_contributions(g, {"a", "b", "c"}, {"A", "B", "C"});
  CHECK(r.items[0].feature == "b");
  CHECK(r.items[0].percent() == doctest::Approx(100.0));
  CHECK(r.items[1].feature == "a");  // ties keep column order
  CHECK(r.to_csv() == "feature,contribution_pct\nb,100.0000\na,0.0000\nc,0.0000\n");
  CHECK(r.to_table(1).find("B") != std::string::npos);
  CHECK_THROWS_AS(feature_contributions(g, {"a"}), InvalidArgument);
  CHECK_THROWS_AS(feature_contributions(Gbt(), {}), UnfittedModel);

  // No splits at all: every share is zero.
  Gbt flat(c);
  flat.fit(Matrix(10, 2, 1.0), {0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2);
  for (const auto& it : feature_contributions(flat, {"a", "b"}).items) CHECK(it.share == 0.0);
}
