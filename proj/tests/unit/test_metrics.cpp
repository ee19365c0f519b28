#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "malweb/metrics.hpp"

using namespace malweb;

namespace {

Matrix one_hot(const std::vector<int>& y, std::size_t k) {
  Matrix p(y.size(), k);
  for (std::size_t i = 0; i < y.size(); ++i) p(i, static_cast<std::size_t>(y[i])) = 1.0;
  return p;
}

Matrix random_proba(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Matrix p(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < k; ++j) s += p(i, j) = u(rng);
    for (std::size_t j = 0; j < k; ++j) p(i, j) /= s;
  }
  return p;
}

}  // namespace

TEST_CASE("top-k example") {
  Matrix p(1, 3);
  p(0, 0) = 0.5;
  p(0, 1) = 0.3;
  p(0, 2) = 0.2;
  CHECK(top_k_accuracy({1}, p, 1) == 0.0);
  CHECK(top_k_accuracy({1}, p, 2) == 1.0);
  CHECK(top_k_accuracy({2}, p, 2) == 0.0);
  CHECK(top_k_accuracy({2}, p, 3) == 1.0);
  CHECK(rank_classes(p.row(0)) == std::vector<std::size_t>{0, 1, 2});

  Matrix tie(1, 3, 1.0 / 3.0);
  CHECK(predict_labels(tie) == std::vector<int>{0});
}

TEST_CASE("perfect predictions") {
  const std::vector<int> y = {0, 1, 2, 1, 0, 2, 2};
  const Metrics m = compute_metrics(y, one_hot(y, 3));
  CHECK(m.accuracy == 1.0);
  CHECK(m.mcc == doctest::Approx(1.0));
  CHECK(m.f1 == doctest::Approx(1.0));
  CHECK(m.precision == doctest::Approx(1.0));
  CHECK(m.recall == doctest::Approx(1.0));
  CHECK(m.roc_auc == doctest::Approx(1.0));
  CHECK(m.top2_accuracy == 1.0);
}

TEST_CASE("binary mcc against the closed form") {
  // tp=3 tn=4 fp=1 fn=2
  const double expected = (3.0 * 4 - 1.0 * 2) / std::sqrt(4.0 * 5 * 5 * 6);
  CHECK(mcc_binary(3, 4, 1, 2) == doctest::Approx(expected));
  CHECK(mcc_multiclass({{4, 1}, {2, 3}}) == doctest::Approx(expected));
  CHECK(mcc_binary(0, 5, 0, 0) == 0.0);
}

TEST_CASE("mcc flips sign when predictions are inverted") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const double tp = static_cast<double>(rng() % 20 + 1), tn = static_cast<double>(rng() % 20 + 1),
                 fp = static_cast<double>(rng() % 20 + 1), fn = static_cast<double>(rng() % 20 + 1);
    CHECK(mcc_binary(fn, fp, tn, tp) == doctest::Approx(-mcc_binary(tp, tn, fp, fn)));
    const double m = mcc_binary(tp, tn, fp, fn);
    CHECK(m >= -1.0);
    CHECK(m <= 1.0);
  }
}

TEST_CASE("auc by pair counting") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> score(0, 5);  // many ties
  for (int t = 0; t < 30; ++t) {
    std::vector<int> pos;
    std::vector<double> s;
    for (int i = 0; i < 40; ++i) {
      pos.push_back(static_cast<int>(rng() % 2));
      s.push_back(score(rng));
    }
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < pos.size(); ++i)
      for (std::size_t j = 0; j < pos.size(); ++j)
        if (pos[i] && !pos[j]) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    if (pairs == 0) continue;
    CHECK(roc_auc_binary(pos, s) == doctest::Approx(wins / pairs));
  }
  CHECK(std::isnan(roc_auc_binary({1, 1}, {0.1, 0.2})));
}

TEST_CASE("metric ranges on random predictions") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) y.push_back(static_cast<int>(rng() % 4));
    const Metrics m = compute_metrics(y, random_proba(60, 4, rng));
    for (auto name : kMetricNames) {
      const double v = metric_value(m, name);
      CHECK(v <= 1.0);
      CHECK(v >= (name == "mcc" ? -1.0 : 0.0));
    }
    CHECK(m.accuracy <= m.top2_accuracy);
    CHECK(m.top2_accuracy <= m.top3_accuracy);
  }
}

TEST_CASE("shape checks") {
  CHECK_THROWS_AS(compute_metrics({0, 1}, Matrix(3, 2, 0.5)), ShapeMismatch);
  CHECK_THROWS_AS(compute_metrics({0, 1}, Matrix(2, 2, 0.6)), ShapeMismatch);
}

TEST_CASE("fold summaries") {
  const MetricSummary s = summarize({0.9, 0.92, 0.94});
  CHECK(s.mean == doctest::Approx(0.92));
  CHECK(s.std == doctest::Approx(0.02));
  CHECK(format_mean_std({0.95254, 0.00113}) == "0.9525 ± 0.0011");
  CHECK(summarize({0.5}).std == 0.0);

  FoldReport r;
  for (double a : {0.8, 0.9}) {
    Metrics m;
    m.accuracy = a;
    r.folds.push_back(m);
  }
  CHECK(r.per_fold("accuracy") == std::vector<double>{0.8, 0.9});
  CHECK(r.summary("accuracy").mean == doctest::Approx(0.85));
  const std::string table = r.to_table("t");
  for (auto name : kMetricNames) CHECK(table.find(std::string(name)) != std::string::npos);
  CHECK(r.to_json().dump().find("accuracy") != std::string::npos);
}
