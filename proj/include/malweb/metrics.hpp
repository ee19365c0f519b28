#pragma once

// Classification metrics and fold aggregation.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "malweb/error.hpp"
#include "malweb/matrix.hpp"

namespace malweb {

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

struct Metrics {
  double accuracy = 0.0;
  double roc_auc = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double top2_accuracy = 0.0;
  double top3_accuracy = 0.0;
};

inline constexpr std::array<std::string_view, 8> kMetricNames = {
    "accuracy", "roc_auc", "f1", "mcc", "precision", "recall", "top2_accuracy", "top3_accuracy"};

double metric_value(const Metrics& m, std::string_view name);

/// Class ordering by descending probability, ties to the lower class index.
std::vector<std::size_t> rank_classes(std::span<const double> proba);

/// Argmax with ties to the lower class index.
std::vector<int> predict_labels(const Matrix& proba);

double top_k_accuracy(const std::vector<int>& y_true, const Matrix& proba, std::size_t k);

/// Confusion counts, rows = truth, cols = prediction.
std::vector<std::vector<double>> confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                                  std::size_t n_classes);

double mcc_binary(double tp, double tn, double fp, double fn);
/// Gorodkin's K-category correlation coefficient; equals mcc_binary for two classes.
double mcc_multiclass(const std::vector<std::vector<double>>& confusion);

/// Rank (Mann-Whitney) AUC with average ranks for ties. NaN when either
/// class is absent.
double roc_auc_binary(const std::vector<int>& is_positive, const std::vector<double>& scores);
/// One-vs-rest macro average over classes that have both positives and negatives.
double roc_auc_ovr(const std::vector<int>& y_true, const Matrix& proba);

/// All metrics; binary uses class 1 as positive, multiclass uses macro
/// precision/recall/F1. Throws ShapeMismatch if sizes disagree or a row
/// does not sum to 1 within 1e-6.
Metrics compute_metrics(const std::vector<int>& y_true, const Matrix& proba);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

/// Mean and sample std (n - 1) of the finite values.
MetricSummary summarize(const std::vector<double>& values);

/// "0.9525 ± 0.0011"
std::string format_mean_std(const MetricSummary& s);

struct FoldReport {
  std::vector<Metrics> folds;

  MetricSummary summary(std::string_view metric) const;
  std::vector<double> per_fold(std::string_view metric) const;
  /// Plain-text table: one row per metric, "mean ± std".
  std::string to_table(std::string_view title = {}) const;
  nlohmann::json to_json() const;
};

}  // namespace malweb
