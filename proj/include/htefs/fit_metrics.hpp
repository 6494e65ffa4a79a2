#pragma once

// Heuristic CATE-fit metrics that need no ground truth (tau-risk, NN-PEHE,
// plug-in tau, CFCV), the ground-truth evaluation metrics, and rank
// aggregation across SCMs.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htefs/estimators.hpp"
#include "htefs/matrix.hpp"

namespace htefs {

enum class MetricKind { TauRisk, NNPEHE, PluginTau, CFCV };

std::string_view to_string(MetricKind kind);
MetricKind metric_from_string(std::string_view name);

// (1/N) sum ((y - m) - (t - p) * tau_hat)^2
double tau_risk(std::span<const double> tau_hat, std::span<const double> y,
                std::span<const double> t, std::span<const double> m_hat,
                std::span<const double> p_hat);

// Imputes tau_i = (2 t_i - 1)(y_i - y_nn(i)) from the Euclidean nearest
// neighbour in the opposite arm (columns standardized, ties to the lower
// row) and returns the mean squared gap to tau_hat.
double nn_pehe(std::span<const double> tau_hat, const Matrix& x, std::span<const double> y,
               std::span<const double> t);

// Indices of each unit's opposite-arm nearest neighbour, as used by nn_pehe.
std::vector<std::size_t> opposite_arm_neighbours(const Matrix& x, std::span<const double> t);

double plugin_tau(std::span<const double> tau_hat, std::span<const double> tau_tilde);

// Doubly-robust imputed effect compared against tau_hat. Throws
// Error(PropensityOutOfRange) if any p is outside the clipping range.
double cfcv(std::span<const double> tau_hat, std::span<const double> y, std::span<const double> t,
            std::span<const double> m1_hat, std::span<const double> m0_hat,
            std::span<const double> p_hat);

double mse_true(std::span<const double> tau_hat, std::span<const double> tau);

struct InclusionError {
  double value = 0.0;
  bool defined = false;  // false when no column is post-treatment
};

InclusionError inclusion_error(const ColumnSet& selected, const std::vector<bool>& post_mask);

// Average ranks (1 = smallest). NaN entries are failures and all receive
// (number of valid entries + 1).
std::vector<double> fractional_ranks(std::span<const double> values);

struct MethodRank {
  std::string method;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single SCM
  std::size_t count = 0;
};

// One map per SCM from method id to MSE. Output sorted by method id.
std::vector<MethodRank> rank_methods(const std::vector<std::map<std::string, double>>& mse_by_scm);

struct MetricOptions {
  double inner_train_fraction = 0.7;
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::T;
  EstimatorOptions estimator_options;
};

struct NuisanceSpec {
  double outcome_lambda = kOutcomeLambda;
  double propensity_lambda = kPropensityLambda;
  std::string outcome_model = "ridge";
  std::string propensity_model = "logistic";
  std::string reference_estimator = "T";
};

struct FitMetricReport {
  MetricKind metric = MetricKind::TauRisk;
  double value = 0.0;
  std::string split_id;
  NuisanceSpec nuisance;
};

// Scores candidate feature subsets against a fixed yardstick: a stratified
// inner split of the rows, with every nuisance model fit once on the inner
// training rows over all columns and evaluated on the validation rows.
class MetricEvaluator {
 public:
  MetricEvaluator(const Matrix& x, std::span<const double> t, std::span<const double> y,
                  MetricKind metric, const MetricOptions& options = {});

  MetricKind metric() const noexcept { return metric_; }
  std::size_t num_columns() const noexcept { return x_train_.cols(); }
  const std::vector<std::size_t>& train_rows() const noexcept { return train_rows_; }
  const std::vector<std::size_t>& validation_rows() const noexcept { return validation_rows_; }

  // Metric value of predictions made on the validation rows.
  double score_predictions(std::span<const double> tau_hat) const;

  // Fits the configured estimator on the inner training rows restricted to
  // `columns` and scores it on the validation rows.
  double score(const ColumnSet& columns) const;

  FitMetricReport report(const ColumnSet& columns) const;

  // Validation-row predictions of a fit on `columns`.
  std::vector<double> validation_predictions(const ColumnSet& columns) const;

 private:
  MetricKind metric_;
  MetricOptions options_;
  std::vector<std::size_t> train_rows_;
  std::vector<std::size_t> validation_rows_;
  Matrix x_train_;
  Matrix x_val_;
  std::vector<double> t_train_, y_train_, t_val_, y_val_;
  // Nuisance predictions on validation rows; which ones are filled depends
  // on the metric.
  std::vector<double> m_hat_, p_hat_, m1_hat_, m0_hat_, tau_tilde_;
};

// Stratified split: `fraction` of each treatment arm goes to the first set.
struct RowSplit {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};
RowSplit stratified_split(std::span<const double> t, double fraction, std::uint64_t seed);

}  // namespace htefs
