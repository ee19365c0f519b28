#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "malweb/models.hpp"
#include "model_internal.hpp"

namespace malweb {

double impurity(const std::vector<double>& counts, Criterion c) {
  double n = 0.0;
  for (double v : counts) n += v;
  if (n <= 0.0) return 0.0;
  double acc = 0.0;
  if (c == Criterion::Gini) {
    for (double v : counts) acc += (v / n) * (v / n);
    return 1.0 - acc;
  }
  for (double v : counts)
    if (v > 0.0) acc -= (v / n) * std::log2(v / n);
  return acc;
}

namespace {

double midpoint(double a, double b) {
  double m = a + (b - a) / 2.0;
  if (!(m > a)) m = b;  // adjacent doubles
  return m;
}

}  // namespace

Split best_split(const Matrix& x, const std::vector<int>& y, std::size_t k, const std::vector<std::size_t>& rows,
                 const std::vector<std::size_t>& features, Criterion criterion, std::size_t min_samples_leaf) {
  Split best;
  best.score = -std::numeric_limits<double>::infinity();
  const std::size_t n = rows.size();
  if (n < 2) return {};

  std::vector<double> total(k, 0.0);
  for (std::size_t r : rows) total[static_cast<std::size_t>(y[r])] += 1.0;
  const double parent = static_cast<double>(n) * impurity(total, criterion);

  std::vector<std::pair<double, int>> col(n);
  std::vector<double> left(k), right(k);
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) col[i] = {x(rows[i], f), y[rows[i]]};
    std::sort(col.begin(), col.end());
    std::fill(left.begin(), left.end(), 0.0);
    right = total;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = static_cast<std::size_t>(col[i].second);
      left[c] += 1.0;
      right[c] -= 1.0;
      if (!(col[i].first < col[i + 1].first)) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
      const double score = parent - static_cast<double>(nl) * impurity(left, criterion) -
                           static_cast<double>(nr) * impurity(right, criterion);
      if (score > best.score) {
        best.score = score;
        best.feature = static_cast<int>(f);
        best.threshold = midpoint(col[i].first, col[i + 1].first);
      }
    }
  }
  if (best.feature < 0) return {};
  return best;
}

void DecisionTree::fit(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  fit_rows(x, y, n_classes, std::move(rows));
}

void DecisionTree::fit_rows(const Matrix& x, const std::vector<int>& y, std::size_t n_classes,
                            std::vector<std::size_t> rows) {
  detail::check_training_data(x, y, n_classes);
  if (rows.empty()) throw EmptyData("tree: no rows to fit");
  if (cfg_.max_depth < 1) throw InvalidConfig({"tree: max_depth must be >= 1"});
  if (cfg_.min_samples_leaf < 1) throw InvalidConfig({"tree: min_samples_leaf must be >= 1"});
  n_classes_ = n_classes;
  n_features_ = x.cols();
  nodes_.clear();
  std::mt19937_64 rng(cfg_.seed);
  build(x, y, rows, 0, rng);
}

int DecisionTree::build(const Matrix& x, const std::vector<int>& y, std::vector<std::size_t>& rows,
                        std::size_t depth, std::mt19937_64& rng) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  std::vector<double> counts(n_classes_, 0.0);
  for (std::size_t r : rows) counts[static_cast<std::size_t>(y[r])] += 1.0;
  {
    TreeNode& node = nodes_.back();
    node.distribution = counts;
    for (double& v : node.distribution) v /= static_cast<double>(rows.size());
  }
  if (depth >= cfg_.max_depth || impurity(counts, cfg_.criterion) <= 0.0 || rows.size() < 2 * cfg_.min_samples_leaf)
    return id;

  std::vector<std::size_t> features(n_features_);
  std::iota(features.begin(), features.end(), 0);
  if (cfg_.max_features > 0 && cfg_.max_features < n_features_) {
    for (std::size_t i = 0; i < cfg_.max_features; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (n_features_ - i));
      std::swap(features[i], features[j]);
    }
    features.resize(cfg_.max_features);
    std::sort(features.begin(), features.end());
  }

  const Split s = best_split(x, y, n_classes_, rows, features, cfg_.criterion, cfg_.min_samples_leaf);
  if (s.feature < 0) return id;

  std::vector<std::size_t> l, r;
  for (std::size_t row : rows) (x(row, static_cast<std::size_t>(s.feature)) < s.threshold ? l : r).push_back(row);
  rows.clear();
  rows.shrink_to_fit();

  nodes_[static_cast<std::size_t>(id)].feature = s.feature;
  nodes_[static_cast<std::size_t>(id)].threshold = s.threshold;
  nodes_[static_cast<std::size_t>(id)].impurity_decrease = s.score;
  const int li = build(x, y, l, depth + 1, rng);
  const int ri = build(x, y, r, depth + 1, rng);
  nodes_[static_cast<std::size_t>(id)].left = li;
  nodes_[static_cast<std::size_t>(id)].right = ri;
  return id;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
  if (nodes_.empty()) throw UnfittedModel("tree: predict before fit");
  std::size_t i = 0;
  while (nodes_[i].feature >= 0)
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes_[i].feature)] < nodes_[i].threshold
                                     ? nodes_[i].left
                                     : nodes_[i].right);
  return nodes_[i];
}

Matrix DecisionTree::predict_proba(const Matrix& x) const {
  if (nodes_.empty()) throw UnfittedModel("tree: predict before fit");
  if (x.cols() != n_features_) throw InvalidArgument("tree: column count mismatch");
  Matrix p(x.rows(), n_classes_);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto& leaf = leaf_for(x.row(i));
    for (std::size_t c = 0; c < n_classes_; ++c) p(i, c) = leaf.distribution[c];
  }
  return p;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

void RandomForest::fit(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) {
  detail::check_training_data(x, y, n_classes);
  if (cfg_.n_trees < 1) throw InvalidConfig({"forest: n_trees must be >= 1"});
  n_classes_ = n_classes;
  trees_.clear();
  trees_.reserve(cfg_.n_trees);
  const std::size_t n = x.rows();
  for (std::size_t t = 0; t < cfg_.n_trees; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> rows(n);
    if (cfg_.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng() % n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeConfig tc;
    tc.max_depth = cfg_.max_depth;
    tc.min_samples_leaf = cfg_.min_samples_leaf;
    tc.criterion = cfg_.criterion;
    tc.max_features = cfg_.max_features;
    tc.seed = rng();
    DecisionTree tree(tc);
    tree.fit_rows(x, y, n_classes, std::move(rows));
    trees_.push_back(std::move(tree));
  }
}

Matrix RandomForest::predict_proba(const Matrix& x) const {
  if (trees_.empty()) throw UnfittedModel("forest: predict before fit");
  Matrix p(x.rows(), n_classes_);
  for (const auto& t : trees_) {
    const Matrix q = t.predict_proba(x);
    for (std::size_t i = 0; i < p.data().size(); ++i) p.data()[i] += q.data()[i];
  }
  for (double& v : p.data()) v /= static_cast<double>(trees_.size());
  return p;
}

}  // namespace malweb
