#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "htefs/matrix.hpp"
#include "htefs/supervised.hpp"

namespace htefs {

enum class EstimatorKind { S, T, X, DR };

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(std::string_view name);

struct EstimatorOptions {
  double outcome_lambda = kOutcomeLambda;
  double propensity_lambda = kPropensityLambda;
  // Replaces the fitted propensity model (X and DR learners) by a constant.
  std::optional<double> fixed_propensity;
};

// Fitted meta-learner. Components by kind:
//   S:  [outcome on (x, t, t*x)]
//   T:  [treated outcome, control outcome]
//   X:  [treated effect g1, control effect g0, propensity]
//   DR: [pseudo-outcome regression]
class CateEstimator {
 public:
  CateEstimator(EstimatorKind kind, std::size_t feature_dim, std::vector<LinearModel> components,
                std::optional<double> fixed_propensity = std::nullopt);

  EstimatorKind kind() const noexcept { return kind_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  const std::vector<LinearModel>& components() const noexcept { return components_; }

  // Column ids in the caller's feature space; informational only.
  const ColumnSet& feature_columns() const noexcept { return feature_columns_; }
  void set_feature_columns(ColumnSet columns) { feature_columns_ = std::move(columns); }

  // Throws Error(DimensionMismatch) when x.cols() != feature_dim().
  std::vector<double> predict(const Matrix& x) const;

 private:
  EstimatorKind kind_;
  std::size_t feature_dim_;
  std::vector<LinearModel> components_;
  std::optional<double> fixed_propensity_;
  ColumnSet feature_columns_;
};

// All fitters throw Error(DegenerateArms) when a treatment arm is empty.
CateEstimator fit_s_learner(const Matrix& x, std::span<const double> t, std::span<const double> y,
                            const EstimatorOptions& options = {});
CateEstimator fit_t_learner(const Matrix& x, std::span<const double> t, std::span<const double> y,
                            const EstimatorOptions& options = {});
CateEstimator fit_x_learner(const Matrix& x, std::span<const double> t, std::span<const double> y,
                            const EstimatorOptions& options = {});
CateEstimator fit_dr_learner(const Matrix& x, std::span<const double> t, std::span<const double> y,
                             const EstimatorOptions& options = {});

CateEstimator fit_cate(EstimatorKind kind, const Matrix& x, std::span<const double> t,
                       std::span<const double> y, const EstimatorOptions& options = {});

inline std::vector<double> predict_cate(const CateEstimator& estimator, const Matrix& x) {
  return estimator.predict(x);
}

// Rows of t equal to 1 and to 0; throws Error(DegenerateArms) if either is empty.
struct ArmRows {
  std::vector<std::size_t> treated;
  std::vector<std::size_t> control;
};
ArmRows split_arms(std::span<const double> t);

}  // namespace htefs
