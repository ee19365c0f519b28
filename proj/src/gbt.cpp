#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "malweb/models.hpp"
#include "model_internal.hpp"

namespace malweb {

GbtConfig GbtConfig::tuned() {
  GbtConfig c;
  c.max_depth = 7;
  c.min_child_weight = 1.0;
  c.n_estimators = 165;
  c.colsample_bytree = 1.0;
  c.learning_rate = 0.3;
  c.tree_method = TreeMethod::Exact;
  c.booster = Booster::Dart;
  c.gamma = 1e-10;
  return c;
}

std::vector<std::string> GbtConfig::validate() const {
  std::vector<std::string> p;
  if (max_depth < 1) p.push_back("max_depth must be >= 1");
  if (!(min_child_weight >= 0.0)) p.push_back("min_child_weight must be >= 0");
  if (n_estimators < 1) p.push_back("n_estimators must be >= 1");
  if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) p.push_back("colsample_bytree must be in (0, 1]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) p.push_back("learning_rate must be > 0");
  if (!(gamma >= 0.0)) p.push_back("gamma must be >= 0");
  if (!(dart_drop_rate >= 0.0 && dart_drop_rate < 1.0)) p.push_back("dart_drop_rate must be in [0, 1)");
  if (!(reg_lambda >= 0.0)) p.push_back("reg_lambda must be >= 0");
  return p;
}

double RegTree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0)
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes[i].feature)] < nodes[i].threshold ? nodes[i].left
                                                                                                    : nodes[i].right);
  return nodes[i].value;
}

SortedColumns SortedColumns::build(const Matrix& x) {
  SortedColumns s;
  s.order.resize(x.cols());
  s.values.resize(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& o = s.order[f];
    o.resize(x.rows());
    std::iota(o.begin(), o.end(), 0u);
    std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    s.values[f].resize(x.rows());
    for (std::size_t i = 0; i < o.size(); ++i) s.values[f][i] = x(o[i], f);
  }
  return s;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr, h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

namespace {

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

// `last` starts at +inf so the first row of a node never closes a candidate.
struct Scan {
  double gl = 0.0, hl = 0.0, last = std::numeric_limits<double>::infinity();
  double g = 0.0, h = 0.0, thr = 0.0;  // node totals and the bar to beat
};

}  // namespace

std::vector<RegTree> fit_regression_trees(const Matrix& x, const SortedColumns& sorted,
                                          const std::vector<std::vector<double>>& grad,
                                          const std::vector<std::vector<double>>& hess,
                                          const std::vector<std::size_t>& features, const RegTreeParams& p) {
  const std::size_t n = x.rows();
  const std::size_t k = grad.size();
  std::vector<RegTree> trees(k);
  std::vector<std::vector<double>> node_g(k), node_h(k);

  // Per (row, tree): gradient, hessian and the frontier slot of its node
  // (-1 once settled). Rows are the outer index so one gather serves every tree.
  struct RowStat {
    float g, h;
    int slot;
  };
  struct Front {
    std::size_t tree;
    int node;
  };
  std::vector<RowStat> rs(n * k);
  std::vector<int> pos(n * k, 0);
  std::vector<Front> frontier;
  for (std::size_t c = 0; c < k; ++c) {
    double g0 = 0.0, h0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      RowStat& r = rs[i * k + c];
      r = {static_cast<float>(grad[c][i]), static_cast<float>(hess[c][i]), static_cast<int>(c)};
      g0 += r.g;
      h0 += r.h;
    }
    trees[c].nodes.emplace_back();
    node_g[c].push_back(g0);
    node_h[c].push_back(h0);
    frontier.push_back({c, 0});
  }

  std::vector<Candidate> best;
  std::vector<Scan> scan;
  // Sorted lists restricted to unsettled rows, rebuilt once they halve.
  std::vector<std::vector<std::uint32_t>> local_order(x.cols());
  std::vector<std::vector<double>> local_values(x.cols());
  bool local = false;
  std::size_t live = n;

  for (std::size_t depth = 0; depth < p.max_depth && !frontier.empty(); ++depth) {
    const std::size_t m = frontier.size();
    best.assign(m, Candidate{});
    // A candidate beats `thr[s]` when gl^2/(hl+l) + gr^2/(hr+l) > thr[s]; checked
    // as num > thr * den so the scan needs no division.
    std::vector<double> fg(m), fh(m), parent(m), thr(m);
    for (std::size_t s = 0; s < m; ++s) {
      fg[s] = node_g[frontier[s].tree][static_cast<std::size_t>(frontier[s].node)];
      fh[s] = node_h[frontier[s].tree][static_cast<std::size_t>(frontier[s].node)];
      parent[s] = fg[s] * fg[s] / (fh[s] + p.reg_lambda);
      thr[s] = parent[s] + 2.0 * p.gamma;
    }
    auto consider = [&](std::size_t sl, std::size_t f, const Scan& sc, double v, double gr, double hr) {
      const double gain = split_gain(sc.gl, sc.hl, gr, hr, p.reg_lambda);
      Candidate& b = best[sl];
      if (!(gain > p.gamma && gain > b.gain)) return;
      thr[sl] = parent[sl] + 2.0 * gain;
      b.gain = gain;
      b.feature = static_cast<int>(f);
      double mid = sc.last + (v - sc.last) / 2.0;
      if (!(mid > sc.last)) mid = v;
      b.threshold = mid;
    };

    // Nodes too light to give both children min_child_weight stay leaves.
    {
      bool any_dead = false;
      std::vector<char> dead(m, 0);
      for (std::size_t s = 0; s < m; ++s)
        if (fh[s] < 2.0 * p.min_child_weight) dead[s] = any_dead = true;
      if (any_dead)
        for (auto& r : rs)
          if (r.slot >= 0 && dead[static_cast<std::size_t>(r.slot)]) r.slot = -1;
    }

    std::size_t active = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < k; ++c)
        if (rs[i * k + c].slot >= 0) {
          ++active;
          break;
        }
    if (active * 2 < live) {
      auto row_active = [&](std::uint32_t row) {
        for (std::size_t c = 0; c < k; ++c)
          if (rs[row * k + c].slot >= 0) return true;
        return false;
      };
      for (std::size_t f : features) {
        const auto& src_o = local ? local_order[f] : sorted.order[f];
        const auto& src_v = local ? local_values[f] : sorted.values[f];
        std::vector<std::uint32_t> o;
        std::vector<double> v;
        o.reserve(active);
        v.reserve(active);
        for (std::size_t q = 0; q < live; ++q)
          if (row_active(src_o[q])) {
            o.push_back(src_o[q]);
            v.push_back(src_v[q]);
          }
        local_order[f] = std::move(o);
        local_values[f] = std::move(v);
      }
      local = true;
      live = active;
    }

    const double mcw = p.min_child_weight;
    const double lam = p.reg_lambda;
    for (std::size_t f : features) {
      scan.assign(m, Scan{});
      for (std::size_t s = 0; s < m; ++s) {
        scan[s].g = fg[s];
        scan[s].h = fh[s];
        scan[s].thr = thr[s];
      }
      Scan* const sp = scan.data();
      const RowStat* const rsp = rs.data();
      const std::uint32_t* order = local ? local_order[f].data() : sorted.order[f].data();
      const double* vals = local ? local_values[f].data() : sorted.values[f].data();
      for (std::size_t q = 0; q < live; ++q) {
        const RowStat* base = rsp + static_cast<std::size_t>(order[q]) * k;
        const double v = vals[q];
        for (std::size_t c = 0; c < k; ++c) {
          const RowStat r = base[c];
          if (r.slot < 0) continue;
          Scan& sc = sp[r.slot];
          const double gl = sc.gl, hl = sc.hl;
          if (v > sc.last) {
            const double hr = sc.h - hl;
            if (hl >= mcw && hr >= mcw) {
              const double gr = sc.g - gl;
              const double dl = hl + lam, dr = hr + lam;
              if (gl * gl * dr + gr * gr * dl > sc.thr * (dl * dr)) {
                consider(static_cast<std::size_t>(r.slot), f, sc, v, gr, hr);
                sc.thr = thr[static_cast<std::size_t>(r.slot)];
              }
            }
          }
          sc.gl = gl + r.g;
          sc.hl = hl + r.h;
          sc.last = v;
        }
      }
    }

    std::vector<Front> next;
    for (std::size_t s = 0; s < m; ++s) {
      if (best[s].feature < 0) continue;
      RegTree& t = trees[frontier[s].tree];
      const auto node = static_cast<std::size_t>(frontier[s].node);
      const int l = static_cast<int>(t.nodes.size());
      t.nodes[node].feature = best[s].feature;
      t.nodes[node].threshold = best[s].threshold;
      t.nodes[node].gain = best[s].gain;
      t.nodes[node].left = l;
      t.nodes[node].right = l + 1;
      t.nodes.emplace_back();
      t.nodes.emplace_back();
      node_g[frontier[s].tree].insert(node_g[frontier[s].tree].end(), {0.0, 0.0});
      node_h[frontier[s].tree].insert(node_h[frontier[s].tree].end(), {0.0, 0.0});
      next.push_back({frontier[s].tree, l});
      next.push_back({frontier[s].tree, l + 1});
    }
    std::vector<std::vector<int>> slot_of(k);
    for (std::size_t c = 0; c < k; ++c) slot_of[c].assign(trees[c].nodes.size(), -1);
    for (std::size_t s = 0; s < next.size(); ++s)
      slot_of[next[s].tree][static_cast<std::size_t>(next[s].node)] = static_cast<int>(s);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < k; ++c) {
        RowStat& r = rs[i * k + c];
        if (r.slot < 0) continue;
        int& at = pos[i * k + c];
        const RegNode& nd = trees[c].nodes[static_cast<std::size_t>(at)];
        if (nd.feature < 0) {
          r.slot = -1;
          continue;
        }
        at = x(i, static_cast<std::size_t>(nd.feature)) < nd.threshold ? nd.left : nd.right;
        node_g[c][static_cast<std::size_t>(at)] += r.g;
        node_h[c][static_cast<std::size_t>(at)] += r.h;
        r.slot = slot_of[c][static_cast<std::size_t>(at)];
      }
    frontier.swap(next);
  }

  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < trees[c].nodes.size(); ++i) {
      RegNode& nd = trees[c].nodes[i];
      nd.cover = node_h[c][i];
      if (nd.feature < 0) nd.value = -node_g[c][i] / (node_h[c][i] + p.reg_lambda) * p.learning_rate;
    }
  return trees;
}

RegTree fit_regression_tree(const Matrix& x, const SortedColumns& sorted, const std::vector<double>& grad,
                            const std::vector<double>& hess, const std::vector<std::size_t>& features,
                            const RegTreeParams& p) {
  return std::move(fit_regression_trees(x, sorted, {grad}, {hess}, features, p).front());
}

namespace {

double mean_cross_entropy(const Matrix& margins, const std::vector<int>& y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < margins.rows(); ++i) {
    const auto z = margins.row(i);
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    loss += mx + std::log(s) - z[static_cast<std::size_t>(y[i])];
  }
  return loss / static_cast<double>(margins.rows());
}

}  // namespace

void Gbt::fit(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) {
  if (auto problems = cfg_.validate(); !problems.empty()) throw InvalidConfig(std::move(problems));
  detail::check_training_data(x, y, n_classes);

  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k = n_classes;
  n_classes_ = k;
  n_features_ = d;
  rounds_.clear();
  weights_.clear();
  loss_.clear();

  const SortedColumns sorted = SortedColumns::build(x);
  RegTreeParams params;
  params.max_depth = cfg_.max_depth;
  params.min_child_weight = cfg_.min_child_weight;
  params.gamma = cfg_.gamma;
  params.reg_lambda = cfg_.reg_lambda;
  params.learning_rate = cfg_.learning_rate;

  std::mt19937_64 col_rng(cfg_.seed);
  std::mt19937_64 drop_rng(cfg_.seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool dart = cfg_.booster == Booster::Dart && cfg_.dart_drop_rate > 0.0;

  Matrix margins(n, k);
  // Training-set output of every tree, kept only for dropout.
  std::vector<std::vector<std::vector<double>>> outputs;
  std::vector<std::size_t> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);

  for (std::size_t r = 0; r < cfg_.n_estimators; ++r) {
    std::vector<std::size_t> features = all_features;
    if (cfg_.colsample_bytree < 1.0) {
      const std::size_t keep =
          std::max<std::size_t>(1, static_cast<std::size_t>(cfg_.colsample_bytree * static_cast<double>(d)));
      for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(col_rng() % (d - i));
        std::swap(features[i], features[j]);
      }
      features.resize(keep);
      std::sort(features.begin(), features.end());
    }

    // Dropped trees as (round, class).
    std::vector<std::pair<std::size_t, std::size_t>> dropped;
    if (dart)
      for (std::size_t t = 0; t < r; ++t)
        for (std::size_t c = 0; c < k; ++c)
          if (unit(drop_rng) < cfg_.dart_drop_rate) dropped.emplace_back(t, c);

    Matrix work = margins;
    for (auto [t, c] : dropped)
      for (std::size_t i = 0; i < n; ++i) work(i, c) -= weights_[t][c] * outputs[t][c][i];
    const Matrix prob = softmax_rows(work);

    std::vector<std::vector<double>> grad(k, std::vector<double>(n)), hess(k, std::vector<double>(n));
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < n; ++i) {
        const double pc = prob(i, c);
        grad[c][i] = pc - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
        hess[c][i] = std::max(2.0 * pc * (1.0 - pc), 1e-16);
      }
    std::vector<RegTree> trees = fit_regression_trees(x, sorted, grad, hess, features, params);
    std::vector<std::vector<double>> out(k, std::vector<double>(n));
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < n; ++i) out[c][i] = trees[c].predict(x.row(i));

    std::vector<double> w(k, 1.0);
    if (!dropped.empty()) {
      // Per-class normalization: the round adds k trees, one per class.
      const double kd = static_cast<double>(dropped.size());
      const double lr = cfg_.learning_rate / static_cast<double>(k);
      const double factor = kd / (kd + lr);
      for (auto [t, c] : dropped) {
        const double old_w = weights_[t][c];
        weights_[t][c] *= factor;
        const double delta = weights_[t][c] - old_w;
        for (std::size_t i = 0; i < n; ++i) margins(i, c) += delta * outputs[t][c][i];
      }
      std::fill(w.begin(), w.end(), 1.0 / (kd + lr));
    }
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < n; ++i) margins(i, c) += w[c] * out[c][i];

    rounds_.push_back(std::move(trees));
    weights_.push_back(std::move(w));
    if (dart) outputs.push_back(std::move(out));
    loss_.push_back(mean_cross_entropy(margins, y));
  }
}

Matrix Gbt::predict_margin(const Matrix& x) const {
  if (!fitted()) throw UnfittedModel("gbt: predict before fit");
  if (x.cols() != n_features_) throw InvalidArgument("gbt: column count mismatch");
  Matrix m(x.rows(), n_classes_);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t r = 0; r < rounds_.size(); ++r)
      for (std::size_t c = 0; c < n_classes_; ++c) m(i, c) += weights_[r][c] * rounds_[r][c].predict(row);
  }
  return m;
}

Matrix Gbt::predict_proba(const Matrix& x) const { return softmax_rows(predict_margin(x)); }

std::vector<double> Gbt::feature_gain() const {
  if (!fitted()) throw UnfittedModel("gbt: contributions before fit");
  std::vector<double> gain(n_features_, 0.0);
  for (const auto& round : rounds_)
    for (const auto& tree : round)
      for (const auto& node : tree.nodes)
        if (node.feature >= 0) gain[static_cast<std::size_t>(node.feature)] += node.gain;
  return gain;
}

}  // namespace malweb
