#pragma once

// URL embedding ingestion plus the supervised reductions applied to them:
// linear discriminant analysis and chi-squared column selection.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "malweb/error.hpp"
#include "malweb/matrix.hpp"

namespace malweb {

enum class EmbeddingSource { Distilbert, Longformer, CharNgram };

class BadHeader : public ParseError {
 public:
  using ParseError::ParseError;
};
class DuplicateUrl : public ParseError {
 public:
  using ParseError::ParseError;
};
class NonFiniteValue : public ParseError {
 public:
  using ParseError::ParseError;
};

struct EmbeddingTable {
  EmbeddingSource source = EmbeddingSource::Distilbert;
  std::size_t dim = 0;
  std::map<std::string, std::vector<double>, std::less<>> rows;
  /// URLs in file order.
  std::vector<std::string> order;
};

/// Reads "url,e0,...,e{d-1}" CSV. Throws BadHeader, DuplicateUrl, NonFiniteValue.
EmbeddingTable import_embeddings(const std::string& path, EmbeddingSource source = EmbeddingSource::Distilbert);
EmbeddingTable parse_embeddings(std::string_view csv_text, EmbeddingSource source = EmbeddingSource::Distilbert);

/// Hashed character n-gram counts folded into `dim` buckets, L2-normalized.
/// Strings shorter than n contribute one gram (the whole string).
std::vector<double> char_ngram_embedding(std::string_view url, std::size_t dim, std::size_t n);

/// Throws InvalidArgument ("EmptyVector") on empty input.
double embedding_mean(std::span<const double> v);

/// Per column (x - min) / (max - min); constant columns map to 0.
Matrix minmax_scale(const Matrix& x);

struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;
  static MinMaxScaler fit(const Matrix& x);
  /// Values outside the fitted range are clipped to [0, 1].
  Matrix transform(const Matrix& x) const;
};

class SingularScatter : public Error {
 public:
  using Error::Error;
};
class TooFewSamples : public Error {
 public:
  using Error::Error;
};

struct LdaModel {
  std::vector<std::vector<double>> class_means;  // indexed by class id
  std::vector<double> overall_mean;
  /// dim x components; unit-norm columns ordered by eigenvalue, descending.
  Matrix projection;
  std::vector<double> eigenvalues;
  double ridge = 0.0;
};

/// Fisher LDA: solves Sb v = lambda Sw v with a ridge of
/// 1e-6 * trace(Sw) / dim on the diagonal of Sw. `y` holds class ids in
/// [0, n_classes). Throws TooFewSamples when n <= number of classes
/// present or n_components > classes - 1.
LdaModel lda_fit(const Matrix& x, const std::vector<int>& y, std::size_t n_components);
/// Centers by the overall training mean and projects.
Matrix lda_transform(const LdaModel& model, const Matrix& x);

struct Chi2Selection {
  std::vector<std::size_t> indices;
  std::vector<double> scores;
};

/// Per-column chi-squared statistic of class-wise sums against their
/// expectation under class priors.
std::vector<double> chi2_scores(const Matrix& x, const std::vector<int>& y);
/// Top-k columns by score, ties to the lower column index. Throws
/// InvalidArgument ("NegativeInput" / "KTooLarge").
Chi2Selection chi2_select(const Matrix& x, const std::vector<int>& y, std::size_t k);

}  // namespace malweb
