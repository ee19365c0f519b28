#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "malweb/embeddings.hpp"
#include "synthetic.hpp"

using namespace malweb;

namespace {

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

// Two Gaussian blobs in 3-D whose means differ along (1,1,0).
void blobs(std::uint64_t seed, Matrix& x, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  x = Matrix(200, 3);
  y.assign(200, 0);
  for (std::size_t i = 0; i < 200; ++i) {
    y[i] = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = z(rng) + (j < 2 ? 1.5 * y[i] : 0.0);
  }
}

double one_nn_accuracy(const std::vector<double>& proj, const std::vector<int>& y) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < proj.size(); ++i) {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < proj.size(); ++j)
      if (j != i && std::fabs(proj[j] - proj[i]) < std::fabs(proj[best] - proj[i])) best = j;
    hit += y[best] == y[i];
  }
  return static_cast<double>(hit) / static_cast<double>(proj.size());
}

}  // namespace

TEST_CASE("import embeddings") {
  CHECK(parse_embeddings("url,e0,e1,e2,e3\na,1,2,3,4\nb,0,0,0,0\nc,-1,0.5,2,1e-3\n").rows.size() == 3);
  const EmbeddingTable t = parse_embeddings("url,e0,e1,e2,e3\na,1,2,3,4\nb,0,0,0,0\nc,-1,0.5,2,1e-3\n");
  CHECK(t.dim == 4);
  CHECK(t.order == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.rows.at("c")[3] == doctest::Approx(1e-3));
  CHECK_THROWS_AS(parse_embeddings("url,e0\na,1\na,2\n"), DuplicateUrl);
  CHECK_THROWS_AS(parse_embeddings("url,e0\na,nan\n"), NonFiniteValue);
  CHECK_THROWS_AS(parse_embeddings("link,e0\na,1\n"), BadHeader);
  CHECK_THROWS_AS(parse_embeddings("url,e1\na,1\n"), BadHeader);
  CHECK_THROWS(parse_embeddings("url,e0,e1\na,1\n"));

  const auto path = std::filesystem::temp_directory_path() / "malweb_emb.csv";
  std::ofstream(path) << "url,e0,e1\n\"http://x/?a=1,2\",0.5,-0.5\n";
  const EmbeddingTable f = import_embeddings(path.string(), EmbeddingSource::Longformer);
  CHECK(f.source == EmbeddingSource::Longformer);
  CHECK(f.rows.count("http://x/?a=1,2") == 1);
  std::filesystem::remove(path);
}

TEST_CASE("char n-gram embedding") {
  const auto a = char_ngram_embedding("http://example.com/login", 64, 3);
  CHECK(a.size() == 64);
  CHECK(a == char_ngram_embedding("http://example.com/login", 64, 3));
  CHECK(norm(a) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(norm(char_ngram_embedding("ab", 64, 3)) == doctest::Approx(1.0));

  // With enough buckets a one-character edit changes the vector.
  std::mt19937_64 rng(1);
  std::size_t same = 0;
  for (int i = 0; i < 200; ++i) {
    std::string u = "http://site" + std::to_string(rng() % 100000) + ".example/p" + std::to_string(i);
    std::string v = u;
    v[7 + rng() % 5] = static_cast<char>('a' + rng() % 26);
    if (u == v) continue;
    same += char_ngram_embedding(u, 4096, 3) == char_ngram_embedding(v, 4096, 3);
  }
  CHECK(same == 0);
}

TEST_CASE("embedding mean") {
  CHECK(embedding_mean(std::vector<double>{1, 2, 3}) == 2.0);
  CHECK(embedding_mean(std::vector<double>(5, 0.0)) == 0.0);
  CHECK(embedding_mean(std::vector<double>{-1, 1}) == 0.0);
  for (std::size_t d = 1; d < 20; ++d) CHECK(embedding_mean(std::vector<double>(d, 0.37)) == doctest::Approx(0.37));
  CHECK_THROWS_AS(embedding_mean(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("min-max scaling") {
  Matrix x(3, 3);
  const double cols[3][3] = {{0, 5, 10}, {7, 7, 7}, {0, 0.25, 1}};
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) x(i, j) = cols[j][i];
  const Matrix s = minmax_scale(x);
  CHECK(s(1, 0) == 0.5);
  CHECK(s(2, 0) == 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s(i, 1) == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s(i, 2) == x(i, 2));

  const MinMaxScaler sc = MinMaxScaler::fit(x);
  Matrix outside(1, 3);
  outside(0, 0) = 20;
  outside(0, 2) = -1;
  const Matrix t = sc.transform(outside);
  CHECK(t(0, 0) == 1.0);
  CHECK(t(0, 2) == 0.0);
}

TEST_CASE("lda toy direction and rank bound") {
  Matrix x(8, 2);
  std::vector<int> y;
  const double offs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 4; ++i) {
      x(static_cast<std::size_t>(c * 4 + i), 0) = c + offs[i][0];
      x(static_cast<std::size_t>(c * 4 + i), 1) = c + offs[i][1];
      y.push_back(c);
    }
  const LdaModel m = lda_fit(x, y, 1);
  const double a = m.projection(0, 0), b = m.projection(1, 0);
  CHECK(std::fabs(a) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
  for (double e : m.eigenvalues) CHECK(e >= -1e-8);

  testing::SyntheticConfig sc;
  sc.n = 400;
  const auto corpus = testing::make_synthetic(sc);
  const LdaModel nine = lda_fit(corpus.embeddings, corpus.labels, 8);
  CHECK(nine.projection.cols() == 8);
  for (std::size_t i = 1; i < nine.eigenvalues.size(); ++i) CHECK(nine.eigenvalues[i] <= nine.eigenvalues[i - 1]);
  for (double e : nine.eigenvalues) CHECK(e >= -1e-8);
  CHECK_THROWS_AS(lda_fit(corpus.embeddings, corpus.labels, 9), TooFewSamples);
  CHECK(lda_transform(nine, corpus.embeddings).cols() == 8);
}

TEST_CASE("lda is invariant to a row permutation") {
  Matrix x;
  std::vector<int> y;
  blobs(3, x, y);
  const LdaModel a = lda_fit(x, y, 1);
  std::vector<std::size_t> perm(x.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  std::vector<int> yp;
  for (std::size_t i : perm) yp.push_back(y[i]);
  const LdaModel b = lda_fit(x.select_rows(perm), yp, 1);
  const double sign = a.projection(0, 0) * b.projection(0, 0) < 0 ? -1.0 : 1.0;
  for (std::size_t j = 0; j < 3; ++j) CHECK(sign * b.projection(j, 0) == doctest::Approx(a.projection(j, 0)).epsilon(1e-9));
}

TEST_CASE("lda projection separates at least as well as a random direction") {
  Matrix x;
  std::vector<int> y;
  blobs(4, x, y);
  const Matrix p = lda_transform(lda_fit(x, y, 1), x);
  std::vector<double> lda(p.data().begin(), p.data().end());
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double w[3] = {z(rng), z(rng), z(rng)};
    std::vector<double> rnd;
    for (std::size_t i = 0; i < x.rows(); ++i) rnd.push_back(w[0] * x(i, 0) + w[1] * x(i, 1) + w[2] * x(i, 2));
    CHECK(one_nn_accuracy(lda, y) >= one_nn_accuracy(rnd, y));
  }
}

TEST_CASE("chi-squared selection") {
  Matrix c2(4, 2);
  const double v[4] = {4, 6, 10, 20};
  for (std::size_t i = 0; i < 4; ++i) {
    c2(i, 0) = v[i];
    c2(i, 1) = 3.0;
  }
  const auto s = chi2_scores(c2, {0, 0, 1, 1});
  CHECK(s[0] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.0));

  const Chi2Selection all = chi2_select(c2, {0, 0, 1, 1}, 2);
  CHECK(all.indices == std::vector<std::size_t>{0, 1});
  Matrix neg = c2;
  neg(0, 1) = -1;
  CHECK_THROWS_AS(chi2_select(neg, {0, 0, 1, 1}, 1), InvalidArgument);
  CHECK_THROWS_AS(chi2_select(c2, {0, 0, 1, 1}, 3), InvalidArgument);

  // Ties go to the lower column.
  Matrix tie(4, 3);
  for (std::size_t i = 0; i < 4; ++i) tie(i, 0) = tie(i, 1) = tie(i, 2) = v[i];
  CHECK(chi2_select(tie, {0, 0, 1, 1}, 2).indices == std::vector<std::size_t>{0, 1});
}

TEST_CASE("chi-squared ranking survives rescaling before min-max") {
  testing::SyntheticConfig sc;
  sc.n = 300;
  const auto corpus = testing::make_synthetic(sc);
  Matrix scaled = corpus.embeddings;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> f(0.1, 50.0);
  for (std::size_t j = 0; j < scaled.cols(); ++j) {
    const double a = f(rng);
    for (std::size_t i = 0; i < scaled.rows(); ++i) scaled(i, j) *= a;
  }
  const auto a = chi2_select(minmax_scale(corpus.embeddings), corpus.labels, 10);
  const auto b = chi2_select(minmax_scale(scaled), corpus.labels, 10);
  CHECK(a.indices == b.indices);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a.scores[i] == doctest::Approx(b.scores[i]).epsilon(1e-9));
}
