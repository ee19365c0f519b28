#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace malweb::testing {

namespace {

double gauss(std::mt19937_64& rng) {
  // Box-Muller keeps the stream identical across standard libraries.
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  const auto& full = schema();
  const std::size_t d = full.size();
  const std::size_t k = cfg.n_classes;

  // Uneven class sizes, as in real threat feeds, but every class well populated.
  std::vector<double> weight(k);
  for (std::size_t c = 0; c < k; ++c) weight[c] = 1.0 + 0.25 * static_cast<double>((c * 5) % k);
  double wsum = 0.0;
  for (double w : weight) wsum += w;
  std::vector<int> labels;
  for (std::size_t c = 0; c < k; ++c) {
    const auto count = static_cast<std::size_t>(std::floor(weight[c] / wsum * static_cast<double>(cfg.n)));
    labels.insert(labels.end(), count, static_cast<int>(c));
  }
  for (std::size_t c = 0; labels.size() < cfg.n; c = (c + 1) % k) labels.push_back(static_cast<int>(c));
  std::shuffle(labels.begin(), labels.end(), rng);

  // Pick informative columns per cascade (the first few numeric ones after a stride).
  std::vector<double> sep(d, 0.0);
  for (Cascade level : {Cascade::Base, Cascade::C1, Cascade::C2, Cascade::C3, Cascade::HostAll}) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < d; ++j)
      if (full[j].cascade == level && full[j].kind == FeatureKind::Numeric) cols.push_back(j);
    std::shuffle(cols.begin(), cols.end(), rng);
    const double s = level == Cascade::Base  ? cfg.sep_base
                     : level == Cascade::C1  ? cfg.sep_c1
                     : level == Cascade::C2  ? cfg.sep_c2
                     : level == Cascade::C3  ? cfg.sep_c3
                                             : cfg.sep_host;
    for (std::size_t i = 0; i < std::min(cfg.informative_per_cascade, cols.size()); ++i) sep[cols[i]] = s;
  }
  Matrix means(k, d);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j) means(c, j) = sep[j] * gauss(rng);

  SyntheticCorpus out;
  out.labels = labels;
  FeatureMatrix& m = out.matrix;
  m.schema = full;
  m.values = Matrix(cfg.n, d);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    m.labels.push_back(static_cast<Label>(c));
    m.urls.push_back("http://sample" + std::to_string(i) + ".example/");
    for (std::size_t j = 0; j < d; ++j) {
      double v = means(c, j) + gauss(rng);
      switch (full[j].kind) {
        case FeatureKind::Boolean: v = v > 0.0 ? 1.0 : 0.0; break;
        case FeatureKind::Categorical: v = std::round(v * 4.0) / 40.0; break;  // frequency-like codes
        case FeatureKind::Numeric:
          // Counts and lengths: informative columns keep a fine grid, the rest look like small counts.
          v = sep[j] > 0.0 ? std::round(v * 8.0) / 8.0 : std::round(std::fabs(v) * 2.0);
          break;
      }
      m.values(i, j) = v;
    }
  }

  Matrix emb_means(k, cfg.embedding_dim);
  for (double& v : emb_means.data()) v = cfg.sep_embedding * gauss(rng);
  out.embeddings = Matrix(cfg.n, cfg.embedding_dim);
  for (std::size_t i = 0; i < cfg.n; ++i)
    for (std::size_t j = 0; j < cfg.embedding_dim; ++j)
      out.embeddings(i, j) = emb_means(static_cast<std::size_t>(labels[i]), j) + gauss(rng);
  return out;
}

Matrix cascade_columns(const FeatureMatrix& m, Cascade level, std::vector<std::string>* names) {
  const FeatureSchema sub = cascade_subset(m.schema, level);
  std::vector<std::size_t> idx;
  for (const auto& f : sub.features()) idx.push_back(*m.schema.index_of(f.name));
  if (names) *names = sub.names();
  return m.values.select_cols(idx);
}

}  // namespace malweb::testing
