#include <algorithm>
#include <cmath>

#include "malweb/models.hpp"
#include "model_internal.hpp"

namespace malweb {

InvalidConfig::InvalidConfig(std::vector<std::string> problems)
    : Error([&] {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

namespace detail {

void check_training_data(const Matrix& x, const std::vector<int>& y, std::size_t n_classes) {
  if (x.rows() == 0) throw EmptyData("no training rows");
  if (y.size() != x.rows()) throw InvalidArgument("label count != row count");
  if (n_classes < 2) throw InvalidArgument("need at least two classes");
  for (int c : y)
    if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw InvalidArgument("class id out of range");
  for (double v : x.data())
    if (!std::isfinite(v)) throw NonFiniteInput("feature matrix contains NaN or infinity");
}

}  // namespace detail

Matrix softmax_rows(const Matrix& margins) {
  Matrix p(margins.rows(), margins.cols());
  for (std::size_t i = 0; i < margins.rows(); ++i) {
    const auto z = margins.row(i);
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      p(i, c) = std::exp(z[c] - mx);
      s += p(i, c);
    }
    for (std::size_t c = 0; c < z.size(); ++c) p(i, c) /= s;
  }
  return p;
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t n = x.rows();
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 1.0);
  if (n == 0) return s;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x(i, j);
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (x(i, j) - m) * (x(i, j) - m);
    v /= static_cast<double>(n);
    s.mean[j] = m;
    s.scale[j] = v > 0.0 ? std::sqrt(v) : 1.0;
  }
  return s;
}

Matrix Standardizer::transform(const Matrix& x) const {
  if (x.cols() != mean.size()) throw InvalidArgument("standardizer: column count mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
  return out;
}

double logreg_objective(const Matrix& x, const std::vector<int>& y, std::size_t k, const std::vector<double>& w,
                        double lambda, std::vector<double>* grad) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (w.size() != (d + 1) * k) throw InvalidArgument("logreg: weight vector has the wrong size");
  if (grad) grad->assign(w.size(), 0.0);

  double loss = 0.0;
  std::vector<double> z(k), p(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) z[c] = w[d * k + c];
    for (std::size_t j = 0; j < d; ++j) {
      const double xv = x(i, j);
      if (xv == 0.0) continue;
      for (std::size_t c = 0; c < k; ++c) z[c] += xv * w[j * k + c];
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += std::exp(z[c] - mx);
    const double lse = mx + std::log(s);
    const auto yi = static_cast<std::size_t>(y[i]);
    loss += lse - z[yi];
    if (!grad) continue;
    for (std::size_t c = 0; c < k; ++c) p[c] = std::exp(z[c] - lse) - (c == yi ? 1.0 : 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      const double xv = x(i, j);
      if (xv == 0.0) continue;
      for (std::size_t c = 0; c < k; ++c) (*grad)[j * k + c] += xv * p[c];
    }
    for (std::size_t c = 0; c < k; ++c) (*grad)[d * k + c] += p[c];
  }
  double reg = 0.0;
  for (std::size_t i = 0; i < d * k; ++i) {
    reg += w[i] * w[i];
    if (grad) (*grad)[i] += lambda * w[i];
  }
  return loss + 0.5 * lambda * reg;
}

void LogisticRegression::fit(const Matrix& x_raw, const std::vector<int>& y, std::size_t n_classes) {
  detail::check_training_data(x_raw, y, n_classes);
  if (cfg_.lambda < 0.0) throw InvalidConfig({"logreg: lambda must be >= 0"});
  n_classes_ = n_classes;
  dim_ = x_raw.cols();
  std_ = Standardizer::fit(x_raw);
  const Matrix x = std_.transform(x_raw);
  const std::size_t n = x.rows();
  warnings_.clear();

  w_.assign((dim_ + 1) * n_classes, 0.0);
  std::vector<double> g, w_try;
  double f = logreg_objective(x, y, n_classes, w_, cfg_.lambda, &g);
  double step = 1.0 / static_cast<double>(n);
  converged_ = false;
  iterations_ = 0;
  for (; iterations_ < cfg_.max_iters; ++iterations_) {
    double gmax = 0.0, gg = 0.0;
    for (double v : g) {
      gmax = std::max(gmax, std::abs(v));
      gg += v * v;
    }
    if (gmax / static_cast<double>(n) <= cfg_.tol) {
      converged_ = true;
      break;
    }
    // Armijo backtracking from a slightly enlarged previous step.
    step *= 2.0;
    double f_try = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      w_try = w_;
      for (std::size_t i = 0; i < w_try.size(); ++i) w_try[i] -= step * g[i];
      f_try = logreg_objective(x, y, n_classes, w_try, cfg_.lambda, nullptr);
      if (f_try <= f - 1e-4 * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged_ = true;  // no further descent representable
      break;
    }
    const double f_prev = f;
    w_.swap(w_try);
    f = logreg_objective(x, y, n_classes, w_, cfg_.lambda, &g);
    if (f_prev - f <= 1e-12 * std::max(1.0, std::abs(f))) {
      converged_ = true;
      ++iterations_;
      break;
    }
  }
  if (!converged_)
    warnings_.push_back("NoConvergence: logreg stopped after " + std::to_string(cfg_.max_iters) + " iterations");
}

Matrix LogisticRegression::predict_proba(const Matrix& x_raw) const {
  if (n_classes_ == 0) throw UnfittedModel("logreg: predict before fit");
  if (x_raw.cols() != dim_) throw InvalidArgument("logreg: column count mismatch");
  const Matrix x = std_.transform(x_raw);
  const std::size_t k = n_classes_;
  Matrix z(x.rows(), k);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < k; ++c) {
      double s = w_[dim_ * k + c];
      for (std::size_t j = 0; j < dim_; ++j) s += x(i, j) * w_[j * k + c];
      z(i, c) = s;
    }
  return softmax_rows(z);
}

}  // namespace malweb
