#include "malweb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "malweb/csv.hpp"
#include "malweb/text.hpp"

namespace malweb {

std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::LogReg: return "logreg";
    case ModelKind::Forest: return "rf";
    case ModelKind::Gbt: return "gbt";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "logreg" || v == "lr") return ModelKind::LogReg;
  if (v == "rf" || v == "forest") return ModelKind::Forest;
  if (v == "gbt" || v == "xgb") return ModelKind::Gbt;
  return std::nullopt;
}

void ModelSpec::set_seed(std::uint64_t seed) {
  forest.seed = seed;
  gbt.seed = seed;
}

std::vector<std::string> ModelSpec::validate() const {
  std::vector<std::string> p;
  switch (kind) {
    case ModelKind::LogReg:
      if (!(logreg.lambda >= 0.0)) p.push_back("logreg.lambda must be >= 0");
      if (logreg.max_iters < 1) p.push_back("logreg.max_iters must be >= 1");
      if (!(logreg.tol > 0.0)) p.push_back("logreg.tol must be > 0");
      break;
    case ModelKind::Forest:
      if (forest.n_trees < 1) p.push_back("rf.n_trees must be >= 1");
      if (forest.max_depth < 1) p.push_back("rf.max_depth must be >= 1");
      if (forest.min_samples_leaf < 1) p.push_back("rf.min_samples_leaf must be >= 1");
      break;
    case ModelKind::Gbt:
      for (auto& s : gbt.validate()) p.push_back("gbt." + s);
      break;
  }
  return p;
}

std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::LogReg: return std::make_unique<LogisticRegression>(spec.logreg);
    case ModelKind::Forest: return std::make_unique<RandomForest>(spec.forest);
    case ModelKind::Gbt: return std::make_unique<Gbt>(spec.gbt);
  }
  throw InvalidArgument("unknown model kind");
}

// ---------------------------------------------------------------------------
// Config

namespace {

class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& obj, std::string prefix, std::vector<std::string>& problems)
      : obj_(obj), prefix_(std::move(prefix)), problems_(problems) {
    if (!obj_.is_object()) problems_.push_back(prefix_ + " must be an object");
  }

  void real(const char* key, double& out) {
    const auto* v = find(key);
    if (!v) return;
    if (!v->is_number()) return bad(key, "a number");
    out = v->get<double>();
  }
  void count(const char* key, std::size_t& out, bool null_is_unlimited = false) {
    const auto* v = find(key);
    if (!v) return;
    if (null_is_unlimited && v->is_null()) {
      out = std::numeric_limits<std::size_t>::max();
      return;
    }
    if (!v->is_number_integer() || v->get<long long>() < 0) return bad(key, "a nonnegative integer");
    out = v->get<std::size_t>();
  }
  void seed(const char* key, std::uint64_t& out) {
    const auto* v = find(key);
    if (!v) return;
    if (!v->is_number_integer() || v->get<long long>() < 0) return bad(key, "a nonnegative integer");
    out = v->get<std::uint64_t>();
  }
  void flag(const char* key, bool& out) {
    const auto* v = find(key);
    if (!v) return;
    if (!v->is_boolean()) return bad(key, "true or false");
    out = v->get<bool>();
  }
  template <typename E>
  void choice(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
    const auto* v = find(key);
    if (!v) return;
    if (v->is_string()) {
      const std::string s = text::to_lower(v->get<std::string>());
      for (const auto& [name, value] : options)
        if (s == name) {
          out = value;
          return;
        }
    }
    std::string names;
    for (const auto& o : options) names += std::string(names.empty() ? "" : "|") + o.first;
    bad(key, "one of " + names);
  }
  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) problems_.push_back(prefix_ + "." + k + ": unknown key");
  }

 private:
  const nlohmann::json* find(const char* key) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }
  void bad(const char* key, const std::string& expected) {
    problems_.push_back(prefix_ + "." + key + ": expected " + expected);
  }

  const nlohmann::json& obj_;
  std::string prefix_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

}  // namespace

ModelSpec parse_model_config(const nlohmann::json& j, ModelSpec spec) {
  std::vector<std::string> problems;
  if (!j.is_object()) throw InvalidConfig({"config must be a JSON object"});
  for (const auto& [k, v] : j.items()) {
    if (k == "model") {
      const auto kind = v.is_string() ? parse_model_kind(v.get<std::string>()) : std::nullopt;
      if (!kind)
        problems.push_back("model: expected logreg|rf|gbt");
      else
        spec.kind = *kind;
    } else if (k == "seed") {
      if (!v.is_number_integer() || v.get<long long>() < 0)
        problems.push_back("seed: expected a nonnegative integer");
      else
        spec.set_seed(v.get<std::uint64_t>());
    } else if (k == "logreg") {
      ConfigReader r(v, k, problems);
      r.real("lambda", spec.logreg.lambda);
      r.count("max_iters", spec.logreg.max_iters);
      r.real("tol", spec.logreg.tol);
      r.finish();
    } else if (k == "rf") {
      ConfigReader r(v, k, problems);
      r.count("n_trees", spec.forest.n_trees);
      r.count("max_depth", spec.forest.max_depth, true);
      r.count("min_samples_leaf", spec.forest.min_samples_leaf);
      r.count("max_features", spec.forest.max_features);
      r.flag("bootstrap", spec.forest.bootstrap);
      r.choice("criterion", spec.forest.criterion, {{"gini", Criterion::Gini}, {"entropy", Criterion::Entropy}});
      r.seed("seed", spec.forest.seed);
      r.finish();
    } else if (k == "gbt") {
      ConfigReader r(v, k, problems);
      r.count("max_depth", spec.gbt.max_depth);
      r.real("min_child_weight", spec.gbt.min_child_weight);
      r.count("n_estimators", spec.gbt.n_estimators);
      r.real("colsample_bytree", spec.gbt.colsample_bytree);
      r.real("learning_rate", spec.gbt.learning_rate);
      r.choice("tree_method", spec.gbt.tree_method, {{"exact", TreeMethod::Exact}});
      r.choice("booster", spec.gbt.booster,
               {{"standard", Booster::Standard}, {"gbtree", Booster::Standard}, {"dart", Booster::Dart}});
      r.real("gamma", spec.gbt.gamma);
      r.real("dart_drop_rate", spec.gbt.dart_drop_rate);
      r.real("reg_lambda", spec.gbt.reg_lambda);
      r.seed("seed", spec.gbt.seed);
      r.finish();
    } else {
      problems.push_back(k + ": unknown key");
    }
  }
  for (auto& p : spec.validate()) problems.push_back(p);
  if (!problems.empty()) throw InvalidConfig(std::move(problems));
  return spec;
}

nlohmann::json model_spec_to_json(const ModelSpec& s) {
  nlohmann::json j;
  j["model"] = model_kind_name(s.kind);
  j["logreg"] = {{"lambda", s.logreg.lambda}, {"max_iters", s.logreg.max_iters}, {"tol", s.logreg.tol}};
  nlohmann::json depth = s.forest.max_depth == std::numeric_limits<std::size_t>::max()
                             ? nlohmann::json(nullptr)
                             : nlohmann::json(s.forest.max_depth);
  j["rf"] = {{"n_trees", s.forest.n_trees},
             {"max_depth", depth},
             {"min_samples_leaf", s.forest.min_samples_leaf},
             {"max_features", s.forest.max_features},
             {"bootstrap", s.forest.bootstrap},
             {"criterion", s.forest.criterion == Criterion::Gini ? "gini" : "entropy"},
             {"seed", s.forest.seed}};
  j["gbt"] = {{"max_depth", s.gbt.max_depth},
              {"min_child_weight", s.gbt.min_child_weight},
              {"n_estimators", s.gbt.n_estimators},
              {"colsample_bytree", s.gbt.colsample_bytree},
              {"learning_rate", s.gbt.learning_rate},
              {"tree_method", "exact"},
              {"booster", s.gbt.booster == Booster::Dart ? "dart" : "standard"},
              {"gamma", s.gbt.gamma},
              {"dart_drop_rate", s.gbt.dart_drop_rate},
              {"reg_lambda", s.gbt.reg_lambda},
              {"seed", s.gbt.seed}};
  return j;
}

// ---------------------------------------------------------------------------
// Embedding reduction

ReductionSpec ReductionSpec::parse(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  ReductionSpec r;
  if (v == "none") return r;
  if (v == "lda") {
    r.kind = ReductionKind::Lda;
    return r;
  }
  if (v.rfind("chi2:", 0) == 0) {
    const std::string num = v.substr(5);
    if (!num.empty() && std::all_of(num.begin(), num.end(), text::is_digit)) {
      r.kind = ReductionKind::Chi2;
      r.chi2_k = std::stoul(num);
      if (r.chi2_k > 0) return r;
    }
  }
  throw InvalidArgument("reduce: expected none, lda or chi2:K (K >= 1), got '" + std::string(s) + "'");
}

std::string ReductionSpec::to_string() const {
  switch (kind) {
    case ReductionKind::None: return "none";
    case ReductionKind::Lda: return "lda";
    case ReductionKind::Chi2: return "chi2:" + std::to_string(chi2_k);
  }
  return "?";
}

EmbeddingReducer::EmbeddingReducer(ReductionSpec spec, std::string source_title)
    : spec_(spec), source_title_(std::move(source_title)) {}

void EmbeddingReducer::fit(const Matrix& emb, const std::vector<int>& y) {
  dim_ = emb.cols();
  names_.clear();
  titles_.clear();
  selected_.clear();
  lda_.reset();
  const bool comps = spec_.summary != EmbeddingSummary::Mean;
  const bool mean = spec_.summary != EmbeddingSummary::Components;

  switch (spec_.kind) {
    case ReductionKind::None:
      if (comps)
        for (std::size_t j = 0; j < dim_; ++j) {
          names_.push_back("emb_e" + std::to_string(j));
          titles_.push_back(source_title_ + " embedding e" + std::to_string(j));
        }
      break;
    case ReductionKind::Lda: {
      const std::set<int> present(y.begin(), y.end());
      std::size_t c = spec_.lda_components;
      if (c == 0) c = std::min(present.size() > 0 ? present.size() - 1 : 0, dim_);
      lda_ = lda_fit(emb, y, c);
      if (comps)
        for (std::size_t j = 0; j < c; ++j) {
          names_.push_back("emb_lda_" + std::to_string(j + 1));
          titles_.push_back(source_title_ + " LDA embedding " + std::to_string(j + 1));
        }
      break;
    }
    case ReductionKind::Chi2: {
      scaler_ = MinMaxScaler::fit(emb);
      const auto sel = chi2_select(scaler_.transform(emb), y, spec_.chi2_k);
      selected_ = sel.indices;
      if (comps)
        for (std::size_t j : selected_) {
          names_.push_back("emb_chi2_e" + std::to_string(j));
          titles_.push_back(source_title_ + " embedding e" + std::to_string(j));
        }
      break;
    }
  }
  if (mean) {
    names_.push_back("emb_mean");
    titles_.push_back(source_title_ + " embedding mean");
  }
}

Matrix EmbeddingReducer::transform(const Matrix& emb) const {
  if (emb.cols() != dim_) throw InvalidArgument("embedding reducer: width mismatch");
  Matrix reduced;
  switch (spec_.kind) {
    case ReductionKind::None: reduced = emb; break;
    case ReductionKind::Lda: reduced = lda_transform(*lda_, emb); break;
    case ReductionKind::Chi2: reduced = scaler_.transform(emb).select_cols(selected_); break;
  }
  const bool comps = spec_.summary != EmbeddingSummary::Mean;
  const bool mean = spec_.summary != EmbeddingSummary::Components;
  Matrix out(emb.rows(), (comps ? reduced.cols() : 0) + (mean ? 1 : 0));
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    std::size_t c = 0;
    if (comps)
      for (double v : reduced.row(i)) out(i, c++) = v;
    if (mean) out(i, c) = reduced.cols() ? embedding_mean(reduced.row(i)) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

namespace {

std::vector<int> take(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

void check_cv_data(const CvData& d) {
  if (d.labels.size() != d.features.rows()) throw InvalidArgument("cv: label count != row count");
  if (!d.feature_names.empty() && d.feature_names.size() != d.features.cols())
    throw InvalidArgument("cv: feature name count != column count");
  if (!d.embeddings.empty() && d.embeddings.rows() != d.features.rows())
    throw InvalidArgument("cv: embedding row count != row count");
  if (d.n_classes < 2) throw InvalidArgument("cv: need at least two classes");
}

Metrics run_fold(const ModelSpec& spec, const CvData& data, const FoldPlan& plan, const ReductionSpec& reduction,
                 std::size_t fold) {
  try {
    const auto train = plan.train_indices(fold);
    const auto test = plan.test_indices(fold);
    if (train.empty() || test.empty()) throw EmptyData("empty train or test split");
    Matrix xtr = data.features.select_rows(train);
    Matrix xte = data.features.select_rows(test);
    const auto ytr = take(data.labels, train);
    const auto yte = take(data.labels, test);
    if (!data.embeddings.empty()) {
      EmbeddingReducer red(reduction, data.embedding_title);
      const Matrix etr = data.embeddings.select_rows(train);
      red.fit(etr, ytr);
      xtr = xtr.hconcat(red.transform(etr));
      xte = xte.hconcat(red.transform(data.embeddings.select_rows(test)));
    }
    auto model = make_classifier(spec);
    model->fit(xtr, ytr, data.n_classes);
    return compute_metrics(yte, model->predict_proba(xte));
  } catch (const FoldError&) {
    throw;
  } catch (const std::exception& e) {
    throw FoldError(fold, e.what());
  }
}

}  // namespace

FoldReport cross_validate(const ModelSpec& spec, const CvData& data, const FoldPlan& plan,
                          const ReductionSpec& reduction, unsigned jobs) {
  check_cv_data(data);
  if (plan.assignments.size() != data.features.rows())
    throw InvalidArgument("cv: fold plan covers " + std::to_string(plan.assignments.size()) + " rows, matrix has " +
                          std::to_string(data.features.rows()));
  if (auto p = spec.validate(); !p.empty()) throw InvalidConfig(std::move(p));

  FoldReport report;
  report.folds.resize(plan.k);
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(plan.k)));
  if (jobs == 1) {
    for (std::size_t f = 0; f < plan.k; ++f) report.folds[f] = run_fold(spec, data, plan, reduction, f);
  } else {
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < jobs; ++w)
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t f = w; f < plan.k; f += jobs) report.folds[f] = run_fold(spec, data, plan, reduction, f);
      }));
    // Surface the lowest failing fold first.
    std::exception_ptr first;
    for (auto& wk : workers) try {
        wk.get();
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    if (first) std::rethrow_exception(first);
  }
  return report;
}

FittedPipeline fit_pipeline(const ModelSpec& spec, const CvData& data, const ReductionSpec& reduction) {
  check_cv_data(data);
  FittedPipeline p;
  p.column_names = data.feature_names;
  p.column_titles = data.feature_titles.empty() ? data.feature_names : data.feature_titles;
  Matrix x = data.features;
  if (!data.embeddings.empty()) {
    p.reducer.emplace(reduction, data.embedding_title);
    p.reducer->fit(data.embeddings, data.labels);
    x = x.hconcat(p.reducer->transform(data.embeddings));
    for (const auto& n : p.reducer->column_names()) p.column_names.push_back(n);
    for (const auto& t : p.reducer->column_titles()) p.column_titles.push_back(t);
  }
  p.model = make_classifier(spec);
  p.model->fit(x, data.labels, data.n_classes);
  return p;
}

// ---------------------------------------------------------------------------
// Contributions

ContributionReport feature_contributions(const Gbt& model, const std::vector<std::string>& names,
                                         const std::vector<std::string>& titles) {
  const auto gain = model.feature_gain();
  if (names.size() != gain.size())
    throw InvalidArgument("contributions: " + std::to_string(names.size()) + " names for " +
                          std::to_string(gain.size()) + " features");
  if (!titles.empty() && titles.size() != names.size()) throw InvalidArgument("contributions: title count mismatch");

  // Sum in ascending order so the total does not depend on feature order.
  std::vector<double> sorted = gain;
  std::sort(sorted.begin(), sorted.end());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);

  ContributionReport r;
  for (std::size_t i = 0; i < gain.size(); ++i)
    r.items.push_back({names[i], titles.empty() ? names[i] : titles[i], total > 0.0 ? gain[i] / total : 0.0});
  std::stable_sort(r.items.begin(), r.items.end(),
                   [](const Contribution& a, const Contribution& b) { return a.share > b.share; });
  return r;
}

std::string ContributionReport::to_csv() const {
  std::string out = "feature,contribution_pct\n";
  char buf[32];
  for (const auto& c : items) {
    std::snprintf(buf, sizeof buf, "%.4f", c.percent());
    out += csv::format_row({c.feature, buf});
  }
  return out;
}

std::string ContributionReport::to_table(std::size_t n) const {
  std::size_t width = 7;
  const std::size_t lim = std::min(n, items.size());
  for (std::size_t i = 0; i < lim; ++i) width = std::max(width, items[i].title.size());
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-*s  %s\n", static_cast<int>(width), "Feature", "Contribution (%)");
  out += buf;
  for (std::size_t i = 0; i < lim; ++i) {
    std::snprintf(buf, sizeof buf, "%-*s  %.4f\n", static_cast<int>(width), items[i].title.c_str(),
                  items[i].percent());
    out += buf;
  }
  return out;
}

}  // namespace malweb
