#pragma once

// Model specs, embedding reduction inside folds, cross-validation and
// gain-based feature contributions.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "malweb/dataset.hpp"
#include "malweb/embeddings.hpp"
#include "malweb/metrics.hpp"
#include "malweb/models.hpp"

namespace malweb {

enum class ModelKind { LogReg, Forest, Gbt };

std::string_view model_kind_name(ModelKind k);
/// logreg, rf, gbt
std::optional<ModelKind> parse_model_kind(std::string_view s);

struct ModelSpec {
  ModelKind kind = ModelKind::Gbt;
  LogRegConfig logreg;
  ForestConfig forest;
  GbtConfig gbt = GbtConfig::tuned();

  /// Applies `seed` to every seeded component.
  void set_seed(std::uint64_t seed);
  /// All problems with the selected model's config.
  std::vector<std::string> validate() const;
};

std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec);

/// Reads {"logreg": {...}, "rf": {...}, "gbt": {...}} over `base`. Unknown
/// keys and bad values are collected and thrown together as InvalidConfig.
ModelSpec parse_model_config(const nlohmann::json& j, ModelSpec base = {});
nlohmann::json model_spec_to_json(const ModelSpec& spec);

enum class ReductionKind { None, Lda, Chi2 };
/// Which derived embedding columns enter the model.
enum class EmbeddingSummary { Components, Mean, Both };

struct ReductionSpec {
  ReductionKind kind = ReductionKind::None;
  std::size_t chi2_k = 20;
  /// 0 = classes - 1 (bounded by the embedding width).
  std::size_t lda_components = 0;
  EmbeddingSummary summary = EmbeddingSummary::Both;

  /// "none", "lda", "chi2:K"
  static ReductionSpec parse(std::string_view s);
  std::string to_string() const;
};

/// Fit on training rows only, then applied to held-out rows.
class EmbeddingReducer {
 public:
  EmbeddingReducer(ReductionSpec spec, std::string source_title = "URL");
  void fit(const Matrix& emb, const std::vector<int>& y);
  Matrix transform(const Matrix& emb) const;
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  const std::vector<std::string>& column_titles() const noexcept { return titles_; }

 private:
  ReductionSpec spec_;
  std::string source_title_;
  std::optional<LdaModel> lda_;
  MinMaxScaler scaler_;
  std::vector<std::size_t> selected_;
  std::size_t dim_ = 0;
  std::vector<std::string> names_;
  std::vector<std::string> titles_;
};

class FoldError : public Error {
 public:
  FoldError(std::size_t fold, const std::string& what)
      : Error("fold " + std::to_string(fold) + ": " + what), fold_(fold) {}
  std::size_t fold() const noexcept { return fold_; }

 private:
  std::size_t fold_;
};

struct CvData {
  Matrix features;
  std::vector<std::string> feature_names;
  std::vector<std::string> feature_titles;  // optional, same length as names when set
  /// n x e, empty when no embeddings are used.
  Matrix embeddings;
  std::string embedding_title = "URL";
  std::vector<int> labels;
  std::size_t n_classes = 0;
};

/// Per fold: fit the reducer and the model on the training folds, score the
/// held-out fold. Fold errors are rethrown with the fold index attached.
/// `jobs` > 1 evaluates folds concurrently; the report does not depend on it.
FoldReport cross_validate(const ModelSpec& spec, const CvData& data, const FoldPlan& plan,
                          const ReductionSpec& reduction = {}, unsigned jobs = 1);

struct FittedPipeline {
  std::unique_ptr<Classifier> model;
  std::optional<EmbeddingReducer> reducer;
  std::vector<std::string> column_names;
  std::vector<std::string> column_titles;
};

/// Fit reducer and model on every row.
FittedPipeline fit_pipeline(const ModelSpec& spec, const CvData& data, const ReductionSpec& reduction = {});

struct Contribution {
  std::string feature;
  std::string title;
  double share = 0.0;  // fraction of total gain
  double percent() const { return share * 100.0; }
};

struct ContributionReport {
  /// Sorted by share descending, ties by column order.
  std::vector<Contribution> items;
  /// "feature,contribution_pct" with percentages to 4 decimals.
  std::string to_csv() const;
  /// Top `n` as an aligned text table.
  std::string to_table(std::size_t n = 10) const;
};

/// Per-feature split gain summed over every tree, normalized. Throws
/// UnfittedModel. With no splits at all, every share is 0.
ContributionReport feature_contributions(const Gbt& model, const std::vector<std::string>& names,
                                         const std::vector<std::string>& titles = {});

}  // namespace malweb
