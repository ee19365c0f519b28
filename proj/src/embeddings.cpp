#include "malweb/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "malweb/csv.hpp"
#include "malweb/text.hpp"

namespace malweb {

EmbeddingTable parse_embeddings(std::string_view csv_text, EmbeddingSource source) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty()) throw BadHeader("embeddings: empty file");
  const auto& header = rows[0];
  if (header.size() < 2 || header[0] != "url") throw BadHeader("embeddings: header must start with url,e0");
  for (std::size_t i = 1; i < header.size(); ++i)
    if (header[i] != "e" + std::to_string(i - 1))
      throw BadHeader("embeddings: expected column e" + std::to_string(i - 1) + ", found '" + header[i] + "'");

  EmbeddingTable t;
  t.source = source;
  t.dim = header.size() - 1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw ParseError("embeddings: line " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                       " fields");
    std::vector<double> v(t.dim);
    for (std::size_t c = 0; c < t.dim; ++c) {
      const std::string& cell = row[c + 1];
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size())
        throw ParseError("embeddings: bad number '" + cell + "' on line " + std::to_string(r + 1));
      if (!std::isfinite(x))
        throw NonFiniteValue("embeddings: non-finite value on line " + std::to_string(r + 1));
      v[c] = x;
    }
    if (!t.rows.emplace(row[0], std::move(v)).second) throw DuplicateUrl("embeddings: duplicate url '" + row[0] + "'");
    t.order.push_back(row[0]);
  }
  return t;
}

EmbeddingTable import_embeddings(const std::string& path, EmbeddingSource source) {
  return parse_embeddings(text::read_file(path), source);
}

std::vector<double> char_ngram_embedding(std::string_view url, std::size_t dim, std::size_t n) {
  if (dim == 0 || n == 0) throw InvalidArgument("char_ngram_embedding: dim and n must be >= 1");
  std::vector<double> v(dim, 0.0);
  if (url.empty()) return v;

  auto fnv1a = [](std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  };
  if (url.size() < n) {
    v[fnv1a(url) % dim] += 1.0;
  } else {
    for (std::size_t i = 0; i + n <= url.size(); ++i) v[fnv1a(url.substr(i, n)) % dim] += 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double embedding_mean(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("EmptyVector: embedding_mean of an empty vector");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

MinMaxScaler MinMaxScaler::fit(const Matrix& x) {
  MinMaxScaler s;
  s.min.assign(x.cols(), 0.0);
  s.max.assign(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double lo = x.rows() ? x(0, c) : 0.0;
    double hi = lo;
    for (std::size_t r = 1; r < x.rows(); ++r) {
      lo = std::min(lo, x(r, c));
      hi = std::max(hi, x(r, c));
    }
    s.min[c] = lo;
    s.max[c] = hi;
  }
  return s;
}

Matrix MinMaxScaler::transform(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double range = max[c] - min[c];
    for (std::size_t r = 0; r < x.rows(); ++r)
      out(r, c) = range > 0.0 ? std::clamp((x(r, c) - min[c]) / range, 0.0, 1.0) : 0.0;
  }
  return out;
}

Matrix minmax_scale(const Matrix& x) { return MinMaxScaler::fit(x).transform(x); }

// ---------------------------------------------------------------------------
// LDA

LdaModel lda_fit(const Matrix& x, const std::vector<int>& y, std::size_t n_components) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (y.size() != n) throw InvalidArgument("lda_fit: label count != row count");
  if (d == 0) throw InvalidArgument("lda_fit: no columns");

  std::set<int> present(y.begin(), y.end());
  const std::size_t classes = present.size();
  const int max_class = present.empty() ? -1 : *present.rbegin();
  if (!present.empty() && *present.begin() < 0) throw InvalidArgument("lda_fit: negative class id");
  if (n <= classes || classes < 2)
    throw TooFewSamples("lda_fit: need more samples than classes and at least two classes");
  if (n_components == 0 || n_components > classes - 1 || n_components > d)
    throw TooFewSamples("lda_fit: n_components must be in [1, min(dim, classes - 1)]");

  LdaModel m;
  m.class_means.assign(static_cast<std::size_t>(max_class + 1), std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(m.class_means.size(), 0);
  m.overall_mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = static_cast<std::size_t>(y[i]);
    ++counts[cls];
    for (std::size_t j = 0; j < d; ++j) {
      m.class_means[cls][j] += x(i, j);
      m.overall_mean[j] += x(i, j);
    }
  }
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c])
      for (double& v : m.class_means[c]) v /= static_cast<double>(counts[c]);
  for (double& v : m.overall_mean) v /= static_cast<double>(n);

  Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd diff(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& mu = m.class_means[static_cast<std::size_t>(y[i])];
    for (std::size_t j = 0; j < d; ++j) diff[j] = x(i, j) - mu[j];
    sw.selfadjointView<Eigen::Lower>().rankUpdate(diff);
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (!counts[c]) continue;
    for (std::size_t j = 0; j < d; ++j) diff[j] = m.class_means[c][j] - m.overall_mean[j];
    sb.selfadjointView<Eigen::Lower>().rankUpdate(diff, static_cast<double>(counts[c]));
  }
  sw = sw.selfadjointView<Eigen::Lower>();
  sb = sb.selfadjointView<Eigen::Lower>();

  const double trace = sw.trace();
  m.ridge = 1e-6 * trace / static_cast<double>(d);
  if (!(m.ridge > 0.0)) m.ridge = 1e-12;
  sw.diagonal().array() += m.ridge;

  if (Eigen::LLT<Eigen::MatrixXd>(sw).info() != Eigen::Success)
    throw SingularScatter("lda_fit: within-class scatter is singular after ridge");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(sb, sw, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw SingularScatter("lda_fit: within-class scatter is singular");

  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const Eigen::MatrixXd& evecs = solver.eigenvectors();
  m.projection = Matrix(d, n_components);
  for (std::size_t k = 0; k < n_components; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - k);
    Eigen::VectorXd v = evecs.col(col);
    v.normalize();
    // Sign convention: largest-magnitude component positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    for (std::size_t j = 0; j < d; ++j) m.projection(j, k) = v[static_cast<Eigen::Index>(j)];
    m.eigenvalues.push_back(evals[col]);
  }
  return m;
}

Matrix lda_transform(const LdaModel& model, const Matrix& x) {
  const std::size_t d = model.projection.rows();
  const std::size_t c = model.projection.cols();
  if (x.cols() != d) throw InvalidArgument("lda_transform: column count does not match the model");
  Matrix out(x.rows(), c);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < c; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (x(i, j) - model.overall_mean[j]) * model.projection(j, k);
      out(i, k) = s;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Chi-squared

std::vector<double> chi2_scores(const Matrix& x, const std::vector<int>& y) {
  if (y.size() != x.rows()) throw InvalidArgument("chi2: label count != row count");
  for (double v : x.data())
    if (v < 0.0) throw InvalidArgument("NegativeInput: chi2 requires nonnegative features");

  int max_class = -1;
  for (int c : y) max_class = std::max(max_class, c);
  const std::size_t classes = static_cast<std::size_t>(max_class + 1);

  std::vector<double> prior(classes, 0.0);
  Matrix observed(classes, x.cols());
  std::vector<double> total(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    prior[c] += 1.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      observed(c, j) += x(i, j);
      total[j] += x(i, j);
    }
  }
  for (double& p : prior) p /= static_cast<double>(x.rows());

  std::vector<double> scores(x.cols(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double chi = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double expected = prior[c] * total[j];
      if (expected <= 0.0) continue;
      const double dlt = observed(c, j) - expected;
      chi += dlt * dlt / expected;
    }
    scores[j] = chi;
  }
  return scores;
}

Chi2Selection chi2_select(const Matrix& x, const std::vector<int>& y, std::size_t k) {
  if (k > x.cols()) throw InvalidArgument("KTooLarge: k=" + std::to_string(k) + " exceeds " + std::to_string(x.cols()) + " columns");
  const auto scores = chi2_scores(x, y);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  Chi2Selection sel;
  for (std::size_t i = 0; i < k; ++i) {
    sel.indices.push_back(order[i]);
    sel.scores.push_back(scores[order[i]]);
  }
  return sel;
}

}  // namespace malweb
