#pragma once

// Classifiers: multinomial logistic regression, CART trees, random forest
// and softmax gradient-boosted trees (with optional DART dropout).
// Labels are class ids in [0, n_classes).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "malweb/error.hpp"
#include "malweb/matrix.hpp"

namespace malweb {

class NonFiniteInput : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};
class EmptyData : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};
class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};
class UnfittedModel : public Error {
 public:
  using Error::Error;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) = 0;
  /// n x n_classes, rows sum to 1.
  virtual Matrix predict_proba(const Matrix& x) const = 0;
  virtual std::size_t n_classes() const = 0;
};

// ---------------------------------------------------------------------------
// Logistic regression

struct LogRegConfig {
  /// Objective: sum of per-row cross-entropy + lambda/2 * ||W||^2 (bias
  /// excluded), on z-scored features. lambda = 1 matches the usual C = 1.
  double lambda = 1.0;
  std::size_t max_iters = 1000;
  double tol = 1e-6;
};

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for constant columns
  static Standardizer fit(const Matrix& x);
  Matrix transform(const Matrix& x) const;
};

/// Objective and gradient at `w`, laid out row-major as (d + 1) x c with the
/// bias in the last row. `x` is used as given (no standardization).
double logreg_objective(const Matrix& x, const std::vector<int>& y, std::size_t n_classes,
                        const std::vector<double>& w, double lambda, std::vector<double>* grad);

class LogisticRegression : public Classifier {
 public:
  explicit LogisticRegression(LogRegConfig cfg = {}) : cfg_(cfg) {}
  void fit(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) override;
  Matrix predict_proba(const Matrix& x) const override;
  std::size_t n_classes() const override { return n_classes_; }

  bool converged() const noexcept { return converged_; }
  std::size_t iterations() const noexcept { return iterations_; }
  const std::vector<double>& weights() const noexcept { return w_; }
  /// Set when the iteration cap was hit (NoConvergence); best iterate kept.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  LogRegConfig cfg_;
  Standardizer std_;
  std::vector<double> w_;
  std::size_t n_classes_ = 0;
  std::size_t dim_ = 0;
  bool converged_ = false;
  std::size_t iterations_ = 0;
  std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Decision tree

enum class Criterion { Gini, Entropy };

struct TreeConfig {
  std::size_t max_depth = std::numeric_limits<std::size_t>::max();
  std::size_t min_samples_leaf = 1;
  Criterion criterion = Criterion::Gini;
  /// Candidate features per split; 0 = all.
  std::size_t max_features = 0;
  std::uint64_t seed = 42;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double impurity_decrease = 0.0;  // weighted by node size
  std::vector<double> distribution;  // class fractions at this node
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;
};

/// Impurity of a class-count vector.
double impurity(const std::vector<double>& counts, Criterion c);

/// Best split of the given rows over `features` (ascending): midpoints of
/// sorted unique values, rows with x < threshold go left. Score is the
/// size-weighted impurity decrease; ties go to the lower feature, then the
/// lower threshold. feature = -1 when no split satisfies min_samples_leaf.
Split best_split(const Matrix& x, const std::vector<int>& y, std::size_t n_classes,
                      const std::vector<std::size_t>& rows, const std::vector<std::size_t>& features,
                      Criterion criterion = Criterion::Gini, std::size_t min_samples_leaf = 1);

class DecisionTree : public Classifier {
 public:
  explicit DecisionTree(TreeConfig cfg = {}) : cfg_(cfg) {}
  void fit(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) override;
  /// Fit on `rows` (may repeat, e.g. a bootstrap sample).
  void fit_rows(const Matrix& x, const std::vector<int>& y, std::size_t n_classes, std::vector<std::size_t> rows);
  Matrix predict_proba(const Matrix& x) const override;
  std::size_t n_classes() const override { return n_classes_; }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;
  const TreeNode& leaf_for(std::span<const double> row) const;

 private:
  int build(const Matrix& x, const std::vector<int>& y, std::vector<std::size_t>& rows, std::size_t depth,
            std::mt19937_64& rng);

  TreeConfig cfg_;
  std::vector<TreeNode> nodes_;
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
};

// ---------------------------------------------------------------------------
// Random forest

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = std::numeric_limits<std::size_t>::max();
  std::size_t min_samples_leaf = 1;
  /// 0 = all features.
  std::size_t max_features = 0;
  bool bootstrap = true;
  Criterion criterion = Criterion::Gini;
  std::uint64_t seed = 42;
};

class RandomForest : public Classifier {
 public:
  explicit RandomForest(ForestConfig cfg = {}) : cfg_(cfg) {}
  void fit(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) override;
  Matrix predict_proba(const Matrix& x) const override;
  std::size_t n_classes() const override { return n_classes_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

 private:
  ForestConfig cfg_;
  std::vector<DecisionTree> trees_;
  std::size_t n_classes_ = 0;
};

// ---------------------------------------------------------------------------
// Gradient-boosted trees

enum class TreeMethod { Exact };
enum class Booster { Standard, Dart };

struct GbtConfig {
  std::size_t max_depth = 6;
  double min_child_weight = 1.0;
  std::size_t n_estimators = 100;
  double colsample_bytree = 1.0;
  double learning_rate = 0.3;
  TreeMethod tree_method = TreeMethod::Exact;
  Booster booster = Booster::Standard;
  double gamma = 0.0;
  double dart_drop_rate = 0.1;
  double reg_lambda = 1.0;
  std::uint64_t seed = 42;

  /// Tuned values: depth 7, min_child_weight 1, 165 rounds, colsample 1.0,
  /// lr 0.3, exact, dart, gamma 1e-10.
  static GbtConfig tuned();
  /// Every violated range, empty when valid.
  std::vector<std::string> validate() const;
};

struct RegNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, learning rate applied
  double gain = 0.0;
  double cover = 0.0;  // hessian sum
};

struct RegTree {
  std::vector<RegNode> nodes;
  double predict(std::span<const double> row) const;
};

/// Presorted column order, built once per fit.
struct SortedColumns {
  std::vector<std::vector<std::uint32_t>> order;  // per feature, row ids sorted by value
  std::vector<std::vector<double>> values;        // per feature, values in that order
  static SortedColumns build(const Matrix& x);
};

struct RegTreeParams {
  std::size_t max_depth = 6;
  double min_child_weight = 1.0;
  double gamma = 0.0;
  double reg_lambda = 1.0;
  double learning_rate = 0.3;
};

/// Second-order split gain 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)].
double split_gain(double gl, double hl, double gr, double hr, double lambda);

/// Exact greedy regression tree over gradient statistics. `features` are the
/// candidate columns (ascending). Ties go to the lower feature, then the
/// lower threshold.
RegTree fit_regression_tree(const Matrix& x, const SortedColumns& sorted, const std::vector<double>& grad,
                            const std::vector<double>& hess, const std::vector<std::size_t>& features,
                            const RegTreeParams& p);

/// Several trees over the same rows and candidate columns (one per entry of
/// `grad`), grown level by level in lockstep. Same result as fitting each
/// tree on its own.
std::vector<RegTree> fit_regression_trees(const Matrix& x, const SortedColumns& sorted,
                                          const std::vector<std::vector<double>>& grad,
                                          const std::vector<std::vector<double>>& hess,
                                          const std::vector<std::size_t>& features, const RegTreeParams& p);

class Gbt : public Classifier {
 public:
  explicit Gbt(GbtConfig cfg = {}) : cfg_(cfg) {}
  void fit(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) override;
  Matrix predict_proba(const Matrix& x) const override;
  Matrix predict_margin(const Matrix& x) const;
  std::size_t n_classes() const override { return n_classes_; }

  const GbtConfig& config() const noexcept { return cfg_; }
  bool fitted() const noexcept { return n_classes_ > 0; }
  std::size_t n_features() const noexcept { return n_features_; }
  /// rounds x classes
  const std::vector<std::vector<RegTree>>& rounds() const noexcept { return rounds_; }
  /// Per-tree output weights, rounds x classes (all 1 without dropout).
  const std::vector<std::vector<double>>& tree_weights() const noexcept { return weights_; }
  /// Mean training cross-entropy after each round.
  const std::vector<double>& training_loss() const noexcept { return loss_; }
  /// Total split gain per feature over every tree.
  std::vector<double> feature_gain() const;

 private:
  GbtConfig cfg_;
  std::vector<std::vector<RegTree>> rounds_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> loss_;
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
};

/// Row-wise softmax of margins.
Matrix softmax_rows(const Matrix& margins);

}  // namespace malweb
