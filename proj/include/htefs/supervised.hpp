#pragma once

#include <span>
#include <vector>

#include "htefs/matrix.hpp"

namespace htefs {

enum class ModelKind { Regression, Logistic };

inline constexpr double kOutcomeLambda = 1e-3;
inline constexpr double kPropensityLambda = 1e-2;
inline constexpr double kPropensityFloor = 0.01;
inline constexpr double kPropensityCeil = 0.99;
inline constexpr std::size_t kMaxIrlsIterations = 100;
inline constexpr double kIrlsTolerance = 1e-8;

// Linear model on raw feature scale. weights[0] is the intercept.
// Fitting standardizes each column with statistics from the fitting rows
// and applies the ridge penalty on that scale; the stored weights are
// mapped back so that prediction is a plain affine map.
struct LinearModel {
  ModelKind kind = ModelKind::Regression;
  double lambda = 0.0;
  std::size_t feature_dim = 0;
  std::vector<double> weights;
  bool converged = true;
  std::size_t iterations = 0;
  std::vector<double> objective_history;  // logistic only: penalized log-likelihood per iterate

  double intercept() const { return weights.front(); }
  std::span<const double> slopes() const { return std::span(weights).subspan(1); }
};

// Minimizes ||y - b - Zw||^2 + lambda ||w||^2 over standardized columns Z.
// Throws Error(SingularSystem) when lambda == 0 and the design is rank
// deficient.
LinearModel fit_ridge(const Matrix& x, std::span<const double> y, double lambda);

// Penalized IRLS with step halving. Requires both classes and lambda > 0.
// A run that hits kMaxIrlsIterations returns the best iterate with
// converged == false.
LinearModel fit_logistic(const Matrix& x, std::span<const double> t, double lambda);

// Affine score for regression; clipped logistic probability otherwise.
std::vector<double> predict(const LinearModel& model, const Matrix& x);

// Penalized Bernoulli log-likelihood on the model's standardized scale.
double penalized_log_likelihood(const LinearModel& model, const Matrix& x,
                                std::span<const double> t);

}  // namespace htefs
