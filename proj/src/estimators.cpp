#include "htefs/estimators.hpp"

#include <algorithm>

#include "htefs/error.hpp"

namespace htefs {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::S: return "S";
    case EstimatorKind::T: return "T";
    case EstimatorKind::X: return "X";
    case EstimatorKind::DR: return "DR";
  }
  return "?";
}

EstimatorKind estimator_from_string(std::string_view name) {
  if (name == "S") return EstimatorKind::S;
  if (name == "T") return EstimatorKind::T;
  if (name == "X") return EstimatorKind::X;
  if (name == "DR") return EstimatorKind::DR;
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

ArmRows split_arms(std::span<const double> t) {
  ArmRows arms;
  for (std::size_t i = 0; i < t.size(); ++i) (t[i] == 1.0 ? arms.treated : arms.control).push_back(i);
  if (arms.treated.empty() || arms.control.empty())
    throw Error(ErrorCode::DegenerateArms, "both treatment arms must be nonempty");
  return arms;
}

CateEstimator::CateEstimator(EstimatorKind kind, std::size_t feature_dim,
                             std::vector<LinearModel> components, std::optional<double> fixed_propensity)
    : kind_(kind),
      feature_dim_(feature_dim),
      components_(std::move(components)),
      fixed_propensity_(fixed_propensity) {}

std::vector<double> CateEstimator::predict(const Matrix& x) const {
  if (x.cols() != feature_dim_)
    throw Error(ErrorCode::DimensionMismatch, "estimator expects " + std::to_string(feature_dim_) +
                                                  " columns, got " + std::to_string(x.cols()));
  const std::size_t n = x.rows();
  const std::size_t k = feature_dim_;
  std::vector<double> out(n);
  switch (kind_) {
    case EstimatorKind::S: {
      const auto& w = components_[0].weights;
      // weights: [b, x (k), t, t*x (k)]
      for (std::size_t i = 0; i < n; ++i) {
        double s = w[k + 1];
        for (std::size_t c = 0; c < k; ++c) s += x(i, c) * w[k + 2 + c];
        out[i] = s;
      }
      break;
    }
    case EstimatorKind::T: {
      const auto f1 = htefs::predict(components_[0], x);
      const auto f0 = htefs::predict(components_[1], x);
      for (std::size_t i = 0; i < n; ++i) out[i] = f1[i] - f0[i];
      break;
    }
    case EstimatorKind::X: {
      const auto g1 = htefs::predict(components_[0], x);
      const auto g0 = htefs::predict(components_[1], x);
      std::vector<double> p = fixed_propensity_ ? std::vector<double>(n, *fixed_propensity_)
                                                : htefs::predict(components_[2], x);
      for (std::size_t i = 0; i < n; ++i) out[i] = p[i] * g0[i] + (1.0 - p[i]) * g1[i];
      break;
    }
    case EstimatorKind::DR:
      out = htefs::predict(components_[0], x);
      break;
  }
  return out;
}

CateEstimator fit_s_learner(const Matrix& x, std::span<const double> t, std::span<const double> y,
                            const EstimatorOptions& options) {
  if (t.size() != x.rows() || y.size() != x.rows())
    throw Error(ErrorCode::LengthMismatch, "x, t and y lengths differ");
  split_arms(t);
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  Matrix design(n, 2 * k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      design(i, c) = x(i, c);
      design(i, k + 1 + c) = t[i] * x(i, c);
    }
    design(i, k) = t[i];
  }
  return CateEstimator(EstimatorKind::S, k, {fit_ridge(design, y, options.outcome_lambda)});
}

namespace {

struct ArmModels {
  LinearModel f1, f0;
};

ArmModels fit_arm_models(const Matrix& x, std::span<const double> y, const ArmRows& arms, double lambda) {
  return {fit_ridge(x.select_rows(arms.treated), gather(y, arms.treated), lambda),
          fit_ridge(x.select_rows(arms.control), gather(y, arms.control), lambda)};
}

void check_lengths(const Matrix& x, std::span<const double> t, std::span<const double> y) {
  if (t.size() != x.rows() || y.size() != x.rows())
    throw Error(ErrorCode::LengthMismatch, "x, t and y lengths differ");
}

}  // namespace

CateEstimator fit_t_learner(const Matrix& x, std::span<const double> t, std::span<const double> y,
                            const EstimatorOptions& options) {
  check_lengths(x, t, y);
  const auto arms = split_arms(t);
  auto m = fit_arm_models(x, y, arms, options.outcome_lambda);
  return CateEstimator(EstimatorKind::T, x.cols(), {std::move(m.f1), std::move(m.f0)});
}

CateEstimator fit_x_learner(const Matrix& x, std::span<const double> t, std::span<const double> y,
                            const EstimatorOptions& options) {
  check_lengths(x, t, y);
  const auto arms = split_arms(t);
  const auto m = fit_arm_models(x, y, arms, options.outcome_lambda);

  const Matrix x1 = x.select_rows(arms.treated);
  const Matrix x0 = x.select_rows(arms.control);
  auto d1 = htefs::predict(m.f0, x1);
  for (std::size_t r = 0; r < d1.size(); ++r) d1[r] = y[arms.treated[r]] - d1[r];
  auto d0 = htefs::predict(m.f1, x0);
  for (std::size_t r = 0; r < d0.size(); ++r) d0[r] = d0[r] - y[arms.control[r]];

  std::vector<LinearModel> comps{fit_ridge(x1, d1, options.outcome_lambda),
                                 fit_ridge(x0, d0, options.outcome_lambda)};
  if (!options.fixed_propensity) comps.push_back(fit_logistic(x, t, options.propensity_lambda));
  return CateEstimator(EstimatorKind::X, x.cols(), std::move(comps), options.fixed_propensity);
}

CateEstimator fit_dr_learner(const Matrix& x, std::span<const double> t, std::span<const double> y,
                             const EstimatorOptions& options) {
  check_lengths(x, t, y);
  const auto arms = split_arms(t);
  if (arms.treated.size() < 2 || arms.control.size() < 2)
    throw Error(ErrorCode::DegenerateArms, "cross-fitting needs two units per arm");

  // Two folds, alternating within each arm so both folds see both arms.
  std::vector<int> fold(x.rows());
  for (std::size_t r = 0; r < arms.treated.size(); ++r) fold[arms.treated[r]] = static_cast<int>(r % 2);
  for (std::size_t r = 0; r < arms.control.size(); ++r) fold[arms.control[r]] = static_cast<int>(r % 2);

  std::vector<double> phi(x.rows());
  for (int f = 0; f < 2; ++f) {
    std::vector<std::size_t> fit_rows, eval_rows;
    for (std::size_t i = 0; i < x.rows(); ++i) (fold[i] == f ? eval_rows : fit_rows).push_back(i);
    const Matrix xf = x.select_rows(fit_rows);
    const auto tf = gather(t, fit_rows);
    const auto yf = gather(y, fit_rows);
    const auto arms_f = split_arms(tf);
    const auto m = fit_arm_models(xf, yf, arms_f, options.outcome_lambda);

    const Matrix xe = x.select_rows(eval_rows);
    const auto m1 = htefs::predict(m.f1, xe);
    const auto m0 = htefs::predict(m.f0, xe);
    const auto p = options.fixed_propensity
                       ? std::vector<double>(eval_rows.size(), *options.fixed_propensity)
                       : htefs::predict(fit_logistic(xf, tf, options.propensity_lambda), xe);
    for (std::size_t r = 0; r < eval_rows.size(); ++r) {
      const std::size_t i = eval_rows[r];
      phi[i] = m1[r] - m0[r] + t[i] * (y[i] - m1[r]) / p[r] -
               (1.0 - t[i]) * (y[i] - m0[r]) / (1.0 - p[r]);
    }
  }
  return CateEstimator(EstimatorKind::DR, x.cols(), {fit_ridge(x, phi, options.outcome_lambda)},
                       options.fixed_propensity);
}

CateEstimator fit_cate(EstimatorKind kind, const Matrix& x, std::span<const double> t,
                       std::span<const double> y, const EstimatorOptions& options) {
  switch (kind) {
    case EstimatorKind::S: return fit_s_learner(x, t, y, options);
    case EstimatorKind::T: return fit_t_learner(x, t, y, options);
    case EstimatorKind::X: return fit_x_learner(x, t, y, options);
    case EstimatorKind::DR: return fit_dr_learner(x, t, y, options);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator kind");
}

}  // namespace htefs
