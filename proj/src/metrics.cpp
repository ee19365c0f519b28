#include "malweb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

namespace malweb {

double metric_value(const Metrics& m, std::string_view name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "roc_auc") return m.roc_auc;
  if (name == "f1") return m.f1;
  if (name == "mcc") return m.mcc;
  if (name == "precision") return m.precision;
  if (name == "recall") return m.recall;
  if (name == "top2_accuracy") return m.top2_accuracy;
  if (name == "top3_accuracy") return m.top3_accuracy;
  throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

std::vector<std::size_t> rank_classes(std::span<const double> proba) {
  std::vector<std::size_t> order(proba.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proba[a] > proba[b]; });
  return order;
}

std::vector<int> predict_labels(const Matrix& proba) {
  std::vector<int> out(proba.rows(), 0);
  for (std::size_t i = 0; i < proba.rows(); ++i) {
    const auto row = proba.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[i] = static_cast<int>(best);
  }
  return out;
}

double top_k_accuracy(const std::vector<int>& y_true, const Matrix& proba, std::size_t k) {
  if (y_true.size() != proba.rows()) throw ShapeMismatch("top_k_accuracy: label count != row count");
  if (y_true.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto order = rank_classes(proba.row(i));
    const std::size_t lim = std::min(k, order.size());
    for (std::size_t j = 0; j < lim; ++j)
      if (static_cast<int>(order[j]) == y_true[i]) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

std::vector<std::vector<double>> confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                                  std::size_t n_classes) {
  if (y_true.size() != y_pred.size()) throw ShapeMismatch("confusion_matrix: size mismatch");
  std::vector<std::vector<double>> cm(n_classes, std::vector<double>(n_classes, 0.0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || static_cast<std::size_t>(y_true[i]) >= n_classes || y_pred[i] < 0 ||
        static_cast<std::size_t>(y_pred[i]) >= n_classes)
      throw ShapeMismatch("confusion_matrix: class id out of range");
    cm[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])] += 1.0;
  }
  return cm;
}

double mcc_binary(double tp, double tn, double fp, double fn) {
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / den;
}

double mcc_multiclass(const std::vector<std::vector<double>>& cm) {
  const std::size_t k = cm.size();
  std::vector<double> t(k, 0.0), p(k, 0.0);
  double c = 0.0, s = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      t[i] += cm[i][j];
      p[j] += cm[i][j];
      s += cm[i][j];
      if (i == j) c += cm[i][j];
    }
  double tp_sum = 0.0, pp = 0.0, tt = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    tp_sum += t[i] * p[i];
    pp += p[i] * p[i];
    tt += t[i] * t[i];
  }
  const double den = std::sqrt((s * s - pp) * (s * s - tt));
  if (den == 0.0) return 0.0;
  return (c * s - tp_sum) / den;
}

double roc_auc_binary(const std::vector<int>& is_positive, const std::vector<double>& scores) {
  if (is_positive.size() != scores.size()) throw ShapeMismatch("roc_auc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  double n_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t q = i; q <= j; ++q)
      if (is_positive[order[q]]) {
        pos_rank_sum += avg_rank;
        n_pos += 1.0;
      }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double roc_auc_ovr(const std::vector<int>& y_true, const Matrix& proba) {
  if (y_true.size() != proba.rows()) throw ShapeMismatch("roc_auc_ovr: label count != row count");
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<int> pos(y_true.size());
  std::vector<double> scores(y_true.size());
  for (std::size_t c = 0; c < proba.cols(); ++c) {
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      pos[i] = y_true[i] == static_cast<int>(c);
      scores[i] = proba(i, c);
    }
    const double auc = roc_auc_binary(pos, scores);
    if (std::isnan(auc)) continue;
    sum += auc;
    ++used;
  }
  return used ? sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
}

namespace {

void check_proba(const std::vector<int>& y_true, const Matrix& proba) {
  if (y_true.size() != proba.rows())
    throw ShapeMismatch("metrics: " + std::to_string(y_true.size()) + " labels for " + std::to_string(proba.rows()) +
                        " probability rows");
  if (proba.cols() < 2) throw ShapeMismatch("metrics: need at least two class columns");
  for (std::size_t i = 0; i < proba.rows(); ++i) {
    double s = 0.0;
    for (double v : proba.row(i)) s += v;
    if (std::abs(s - 1.0) > 1e-6) throw ShapeMismatch("metrics: probability row " + std::to_string(i) + " sums to " + std::to_string(s));
  }
  for (int y : y_true)
    if (y < 0 || static_cast<std::size_t>(y) >= proba.cols()) throw ShapeMismatch("metrics: label out of range");
}

}  // namespace

Metrics compute_metrics(const std::vector<int>& y_true, const Matrix& proba) {
  check_proba(y_true, proba);
  const std::size_t k = proba.cols();
  const auto y_pred = predict_labels(proba);
  const auto cm = confusion_matrix(y_true, y_pred, k);

  Metrics m;
  double correct = 0.0;
  for (std::size_t c = 0; c < k; ++c) correct += cm[c][c];
  m.accuracy = y_true.empty() ? 0.0 : correct / static_cast<double>(y_true.size());
  m.top2_accuracy = top_k_accuracy(y_true, proba, 2);
  m.top3_accuracy = top_k_accuracy(y_true, proba, 3);

  auto prf = [&](std::size_t c, double& p, double& r, double& f) {
    double tp = cm[c][c], col = 0.0, row = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      col += cm[j][c];
      row += cm[c][j];
    }
    p = col > 0.0 ? tp / col : 0.0;
    r = row > 0.0 ? tp / row : 0.0;
    f = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  };

  if (k == 2) {
    prf(1, m.precision, m.recall, m.f1);
    m.mcc = mcc_binary(cm[1][1], cm[0][0], cm[0][1], cm[1][0]);
    std::vector<int> pos(y_true.size());
    std::vector<double> s(y_true.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      pos[i] = y_true[i] == 1;
      s[i] = proba(i, 1);
    }
    m.roc_auc = roc_auc_binary(pos, s);
  } else {
    double ps = 0.0, rs = 0.0, fs = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        row += cm[c][j];
        col += cm[j][c];
      }
      if (row == 0.0 && col == 0.0) continue;  // class absent from truth and predictions
      double p, r, f;
      prf(c, p, r, f);
      ps += p;
      rs += r;
      fs += f;
      ++used;
    }
    if (used) {
      m.precision = ps / static_cast<double>(used);
      m.recall = rs / static_cast<double>(used);
      m.f1 = fs / static_cast<double>(used);
    }
    m.mcc = mcc_multiclass(cm);
    m.roc_auc = roc_auc_ovr(y_true, proba);
  }
  return m;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  std::vector<double> v;
  for (double x : values)
    if (std::isfinite(x)) v.push_back(x);
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::string format_mean_std(const MetricSummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f \xC2\xB1 %.4f", s.mean, s.std);
  return buf;
}

std::vector<double> FoldReport::per_fold(std::string_view metric) const {
  std::vector<double> v;
  v.reserve(folds.size());
  for (const auto& f : folds) v.push_back(metric_value(f, metric));
  return v;
}

MetricSummary FoldReport::summary(std::string_view metric) const { return summarize(per_fold(metric)); }

std::string FoldReport::to_table(std::string_view title) const {
  std::string out;
  if (!title.empty()) out.append(title).append("\n");
  char buf[96];
  for (auto name : kMetricNames) {
    std::snprintf(buf, sizeof buf, "%-14s %s\n", std::string(name).c_str(), format_mean_std(summary(name)).c_str());
    out += buf;
  }
  return out;
}

nlohmann::json FoldReport::to_json() const {
  nlohmann::json j;
  j["n_folds"] = folds.size();
  nlohmann::json summ = nlohmann::json::object();
  nlohmann::json per = nlohmann::json::object();
  for (auto name : kMetricNames) {
    const auto s = summary(name);
    const std::string key(name);
    summ[key] = {{"mean", s.mean}, {"std", s.std}, {"formatted", format_mean_std(s)}};
    per[key] = per_fold(name);
  }
  j["summary"] = summ;
  j["folds"] = per;
  return j;
}

}  // namespace malweb
