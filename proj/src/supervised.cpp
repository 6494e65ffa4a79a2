#include "htefs/supervised.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "htefs/error.hpp"
#include "htefs/kernels.hpp"

namespace htefs {
namespace {

struct Standardized {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<std::vector<double>> columns;  // standardized, one vector per column
};

Standardized standardize(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  Standardized s;
  s.mean.resize(k);
  s.scale.resize(k);
  s.columns.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto col = x.column(c);
    const double mu = kernels::sum(col) / static_cast<double>(n);
    const double var = kernels::sum_sq_dev(col, mu) / static_cast<double>(n);
    const double sd = std::sqrt(var);
    // Constant columns stay at zero after centering; a unit scale keeps
    // the back-transform finite.
    const double sc = sd > 1e-12 * (1.0 + std::abs(mu)) ? sd : 1.0;
    for (auto& v : col) v = (v - mu) / sc;
    s.mean[c] = mu;
    s.scale[c] = sc;
    s.columns[c] = std::move(col);
  }
  return s;
}

void check_inputs(const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "row count differs from target length");
  if (x.rows() == 0) throw Error(ErrorCode::InvalidArgument, "no rows to fit");
}

std::vector<double> to_raw(const Standardized& s, double intercept, const Eigen::VectorXd& w) {
  const std::size_t k = s.mean.size();
  std::vector<double> out(k + 1);
  double b = intercept;
  for (std::size_t c = 0; c < k; ++c) {
    out[c + 1] = w(static_cast<long>(c)) / s.scale[c];
    b -= out[c + 1] * s.mean[c];
  }
  out[0] = b;
  return out;
}

double log1pexp(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

}  // namespace

LinearModel fit_ridge(const Matrix& x, std::span<const double> y, double lambda) {
  check_inputs(x, y);
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be nonnegative");
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  const auto s = standardize(x);
  const double ybar = kernels::sum(y) / static_cast<double>(n);
  std::vector<double> yc(y.begin(), y.end());
  for (auto& v : yc) v -= ybar;

  Eigen::MatrixXd gram(static_cast<long>(k), static_cast<long>(k));
  Eigen::VectorXd rhs(static_cast<long>(k));
  for (std::size_t a = 0; a < k; ++a) {
    rhs(static_cast<long>(a)) = kernels::dot(s.columns[a], yc);
    for (std::size_t b = a; b < k; ++b) {
      const double v = kernels::dot(s.columns[a], s.columns[b]);
      gram(static_cast<long>(a), static_cast<long>(b)) = v;
      gram(static_cast<long>(b), static_cast<long>(a)) = v;
    }
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<long>(k));
  if (k > 0) {
    if (lambda == 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
      const double hi = std::max(eig.eigenvalues().maxCoeff(), 1.0);
      if (eig.eigenvalues().minCoeff() <= 1e-10 * hi)
        throw Error(ErrorCode::SingularSystem, "design is rank deficient and lambda is 0");
    }
    gram.diagonal().array() += lambda;
    w = gram.ldlt().solve(rhs);
  }

  LinearModel model;
  model.kind = ModelKind::Regression;
  model.lambda = lambda;
  model.feature_dim = k;
  model.weights = to_raw(s, ybar, w);
  return model;
}

LinearModel fit_logistic(const Matrix& x, std::span<const double> t, double lambda) {
  check_inputs(x, t);
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "logistic lambda must be positive");
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  std::size_t ones = 0;
  for (double v : t) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidArgument, "treatment must be 0/1");
    ones += v == 1.0;
  }
  if (ones == 0 || ones == n) throw Error(ErrorCode::DegenerateArms, "logistic fit needs both classes");

  const auto s = standardize(x);
  // Design columns: intercept, then standardized features.
  std::vector<std::vector<double>> z;
  z.reserve(k + 1);
  z.emplace_back(n, 1.0);
  for (const auto& c : s.columns) z.push_back(c);
  const std::size_t q = k + 1;

  auto objective = [&](const Eigen::VectorXd& beta, std::vector<double>& score) {
    std::fill(score.begin(), score.end(), beta(0));
    for (std::size_t c = 1; c < q; ++c) kernels::axpy(beta(static_cast<long>(c)), z[c], score);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) ll += t[i] * score[i] - log1pexp(score[i]);
    return ll - 0.5 * lambda * beta.tail(static_cast<long>(k)).squaredNorm();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<long>(q));
  const double pbar = static_cast<double>(ones) / static_cast<double>(n);
  beta(0) = std::log(pbar / (1.0 - pbar));
  std::vector<double> score(n), p(n), w(n), resid(n);
  double obj = objective(beta, score);

  LinearModel model;
  model.kind = ModelKind::Logistic;
  model.lambda = lambda;
  model.feature_dim = k;
  model.converged = false;
  model.objective_history.push_back(obj);

  for (std::size_t it = 1; it <= kMaxIrlsIterations; ++it) {
    model.iterations = it;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = sigmoid(score[i]);
      w[i] = std::max(p[i] * (1.0 - p[i]), 1e-12);
      resid[i] = t[i] - p[i];
    }
    Eigen::MatrixXd h(static_cast<long>(q), static_cast<long>(q));
    Eigen::VectorXd g(static_cast<long>(q));
    for (std::size_t a = 0; a < q; ++a) {
      g(static_cast<long>(a)) = kernels::dot(z[a], resid);
      for (std::size_t b = a; b < q; ++b) {
        const double v = kernels::weighted_dot(w, z[a], z[b]);
        h(static_cast<long>(a), static_cast<long>(b)) = v;
        h(static_cast<long>(b), static_cast<long>(a)) = v;
      }
    }
    for (std::size_t c = 1; c < q; ++c) {
      h(static_cast<long>(c), static_cast<long>(c)) += lambda;
      g(static_cast<long>(c)) -= lambda * beta(static_cast<long>(c));
    }
    Eigen::VectorXd step = h.ldlt().solve(g);

    // Step halving keeps the penalized objective nondecreasing.
    double scale = 1.0;
    bool moved = false;
    for (int half = 0; half < 40; ++half, scale *= 0.5) {
      Eigen::VectorXd trial = beta + scale * step;
      std::vector<double> trial_score(n);
      const double trial_obj = objective(trial, trial_score);
      if (trial_obj >= obj) {
        beta = trial;
        obj = trial_obj;
        score = std::move(trial_score);
        moved = true;
        model.objective_history.push_back(obj);
        break;
      }
    }
    const double change = moved ? (scale * step).cwiseAbs().maxCoeff() : 0.0;
    if (change < kIrlsTolerance) {
      model.converged = true;
      break;
    }
  }

  model.weights = to_raw(s, beta(0), beta.tail(static_cast<long>(k)));
  return model;
}

std::vector<double> predict(const LinearModel& model, const Matrix& x) {
  if (x.cols() != model.feature_dim)
    throw Error(ErrorCode::DimensionMismatch, "predict: expected " + std::to_string(model.feature_dim) +
                                                  " columns, got " + std::to_string(x.cols()));
  std::vector<double> out(x.rows());
  const auto slopes = model.slopes();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = model.intercept() + kernels::dot(x.row(i), slopes);
    out[i] = model.kind == ModelKind::Regression
                 ? s
                 : std::clamp(sigmoid(s), kPropensityFloor, kPropensityCeil);
  }
  return out;
}

double penalized_log_likelihood(const LinearModel& model, const Matrix& x, std::span<const double> t) {
  check_inputs(x, t);
  if (x.cols() != model.feature_dim) throw Error(ErrorCode::DimensionMismatch, "column count mismatch");
  const auto s = standardize(x);
  double ll = 0.0;
  const auto slopes = model.slopes();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double score = model.intercept() + kernels::dot(x.row(i), slopes);
    ll += t[i] * score - log1pexp(score);
  }
  double pen = 0.0;
  for (std::size_t c = 0; c < model.feature_dim; ++c) {
    const double wc = slopes[c] * s.scale[c];
    pen += wc * wc;
  }
  return ll - 0.5 * model.lambda * pen;
}

}  // namespace htefs
