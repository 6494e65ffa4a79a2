#include "htefs/fit_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "htefs/error.hpp"
#include "htefs/kernels.hpp"
#include "htefs/rng.hpp"

namespace htefs {

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::TauRisk: return "tau_risk";
    case MetricKind::NNPEHE: return "nn_pehe";
    case MetricKind::PluginTau: return "plugin_tau";
    case MetricKind::CFCV: return "cfcv";
  }
  return "?";
}

MetricKind metric_from_string(std::string_view name) {
  if (name == "tau_risk") return MetricKind::TauRisk;
  if (name == "nn_pehe") return MetricKind::NNPEHE;
  if (name == "plugin_tau") return MetricKind::PluginTau;
  if (name == "cfcv") return MetricKind::CFCV;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCode::LengthMismatch, std::string(what) + ": input lengths differ");
}

double mean_sq_diff(std::span<const double> a, std::span<const double> b) {
  if (a.empty()) return 0.0;
  return kernels::sum_sq_diff(a, b) / static_cast<double>(a.size());
}

}  // namespace

double tau_risk(std::span<const double> tau_hat, std::span<const double> y, std::span<const double> t,
                std::span<const double> m_hat, std::span<const double> p_hat) {
  const std::size_t n = tau_hat.size();
  require_same(n, y.size(), "tau_risk");
  require_same(n, t.size(), "tau_risk");
  require_same(n, m_hat.size(), "tau_risk");
  require_same(n, p_hat.size(), "tau_risk");
  if (n == 0) return 0.0;
  std::vector<double> r(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = y[i] - m_hat[i];
    w[i] = t[i] - p_hat[i];
  }
  return kernels::sum_sq_r_loss(r, w, tau_hat) / static_cast<double>(n);
}

std::vector<std::size_t> opposite_arm_neighbours(const Matrix& x, std::span<const double> t) {
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  require_same(n, t.size(), "nn_pehe");
  const auto arms = split_arms(t);

  Matrix z = x;
  for (std::size_t c = 0; c < k; ++c) {
    auto col = x.column(c);
    const double mu = kernels::sum(col) / static_cast<double>(n);
    const double sd = std::sqrt(kernels::sum_sq_dev(col, mu) / static_cast<double>(n));
    const double sc = sd > 0.0 ? sd : 1.0;
    for (std::size_t i = 0; i < n; ++i) z(i, c) = (x(i, c) - mu) / sc;
  }

  std::vector<std::size_t> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pool = t[i] == 1.0 ? arms.control : arms.treated;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = pool.front();
    for (std::size_t j : pool) {  // pool is ascending, so ties keep the lower row
      const double dist = kernels::sum_sq_diff(z.row(i), z.row(j));
      if (dist < best) {
        best = dist;
        arg = j;
      }
    }
    nn[i] = arg;
  }
  return nn;
}

double nn_pehe(std::span<const double> tau_hat, const Matrix& x, std::span<const double> y,
               std::span<const double> t) {
  const std::size_t n = tau_hat.size();
  require_same(n, y.size(), "nn_pehe");
  require_same(n, x.rows(), "nn_pehe");
  const auto nn = opposite_arm_neighbours(x, t);
  std::vector<double> imputed(n);
  for (std::size_t i = 0; i < n; ++i) imputed[i] = (2.0 * t[i] - 1.0) * (y[i] - y[nn[i]]);
  return mean_sq_diff(imputed, tau_hat);
}

double plugin_tau(std::span<const double> tau_hat, std::span<const double> tau_tilde) {
  require_same(tau_hat.size(), tau_tilde.size(), "plugin_tau");
  return mean_sq_diff(tau_tilde, tau_hat);
}

double cfcv(std::span<const double> tau_hat, std::span<const double> y, std::span<const double> t,
            std::span<const double> m1_hat, std::span<const double> m0_hat,
            std::span<const double> p_hat) {
  const std::size_t n = tau_hat.size();
  require_same(n, y.size(), "cfcv");
  require_same(n, t.size(), "cfcv");
  require_same(n, m1_hat.size(), "cfcv");
  require_same(n, m0_hat.size(), "cfcv");
  require_same(n, p_hat.size(), "cfcv");
  std::vector<double> imputed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = p_hat[i];
    if (!(p >= kPropensityFloor - 1e-12 && p <= kPropensityCeil + 1e-12))
      throw Error(ErrorCode::PropensityOutOfRange, "cfcv: propensity outside the clipping range");
    imputed[i] = m1_hat[i] - m0_hat[i] + t[i] * (y[i] - m1_hat[i]) / p -
                 (1.0 - t[i]) * (y[i] - m0_hat[i]) / (1.0 - p);
  }
  return mean_sq_diff(imputed, tau_hat);
}

double mse_true(std::span<const double> tau_hat, std::span<const double> tau) {
  require_same(tau_hat.size(), tau.size(), "mse_true");
  return mean_sq_diff(tau, tau_hat);
}

InclusionError inclusion_error(const ColumnSet& selected, const std::vector<bool>& post_mask) {
  const auto f = static_cast<std::size_t>(std::count(post_mask.begin(), post_mask.end(), true));
  if (f == 0) return {0.0, false};
  std::set<std::size_t> unique(selected.begin(), selected.end());
  std::size_t hit = 0;
  for (std::size_t c : unique)
    if (c < post_mask.size() && post_mask[c]) ++hit;
  return {static_cast<double>(hit) / static_cast<double>(f), true};
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t k = values.size();
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < k; ++i)
    if (!std::isnan(values[i])) valid.push_back(i);
  std::stable_sort(valid.begin(), valid.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(k, static_cast<double>(valid.size() + 1));
  for (std::size_t s = 0; s < valid.size();) {
    std::size_t e = s;
    while (e + 1 < valid.size() && values[valid[e + 1]] == values[valid[s]]) ++e;
    const double r = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t q = s; q <= e; ++q) ranks[valid[q]] = r;
    s = e + 1;
  }
  return ranks;
}

std::vector<MethodRank> rank_methods(const std::vector<std::map<std::string, double>>& mse_by_scm) {
  std::map<std::string, std::vector<double>> per_method;
  for (const auto& scm : mse_by_scm) {
    std::vector<double> vals;
    for (const auto& [name, v] : scm) vals.push_back(v);
    const auto ranks = fractional_ranks(vals);
    std::size_t k = 0;
    for (const auto& [name, v] : scm) per_method[name].push_back(ranks[k++]);
  }
  std::vector<MethodRank> out;
  for (const auto& [name, ranks] : per_method) {
    MethodRank m;
    m.method = name;
    m.count = ranks.size();
    m.mean = std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(m.count);
    if (m.count > 1) {
      double ss = 0.0;
      for (double r : ranks) ss += (r - m.mean) * (r - m.mean);
      m.sd = std::sqrt(ss / static_cast<double>(m.count - 1));
    }
    out.push_back(std::move(m));
  }
  return out;
}

RowSplit stratified_split(std::span<const double> t, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "split fraction must lie in (0, 1)");
  Rng rng(seed);
  RowSplit split;
  for (double arm : {1.0, 0.0}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] == arm) rows.push_back(i);
    rng.shuffle(rows);
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
    if (rows.size() >= 2) take = std::clamp<std::size_t>(take, 1, rows.size() - 1);
    split.first.insert(split.first.end(), rows.begin(), rows.begin() + static_cast<long>(take));
    split.second.insert(split.second.end(), rows.begin() + static_cast<long>(take), rows.end());
  }
  std::sort(split.first.begin(), split.first.end());
  std::sort(split.second.begin(), split.second.end());
  return split;
}

MetricEvaluator::MetricEvaluator(const Matrix& x, std::span<const double> t, std::span<const double> y,
                                 MetricKind metric, const MetricOptions& options)
    : metric_(metric), options_(options) {
  require_same(x.rows(), t.size(), "MetricEvaluator");
  require_same(x.rows(), y.size(), "MetricEvaluator");
  auto split = stratified_split(t, options.inner_train_fraction, options.seed);
  train_rows_ = std::move(split.first);
  validation_rows_ = std::move(split.second);
  x_train_ = x.select_rows(train_rows_);
  x_val_ = x.select_rows(validation_rows_);
  t_train_ = gather(t, train_rows_);
  y_train_ = gather(y, train_rows_);
  t_val_ = gather(t, validation_rows_);
  y_val_ = gather(y, validation_rows_);
  split_arms(t_train_);
  split_arms(t_val_);

  const auto& eo = options.estimator_options;
  switch (metric) {
    case MetricKind::TauRisk:
      m_hat_ = predict(fit_ridge(x_train_, y_train_, eo.outcome_lambda), x_val_);
      p_hat_ = predict(fit_logistic(x_train_, t_train_, eo.propensity_lambda), x_val_);
      break;
    case MetricKind::NNPEHE:
      break;
    case MetricKind::PluginTau:
      tau_tilde_ = fit_t_learner(x_train_, t_train_, y_train_, eo).predict(x_val_);
      break;
    case MetricKind::CFCV: {
      const auto arms = split_arms(t_train_);
      m1_hat_ = predict(fit_ridge(x_train_.select_rows(arms.treated), gather(y_train_, arms.treated),
                                  eo.outcome_lambda),
                        x_val_);
      m0_hat_ = predict(fit_ridge(x_train_.select_rows(arms.control), gather(y_train_, arms.control),
                                  eo.outcome_lambda),
                        x_val_);
      p_hat_ = predict(fit_logistic(x_train_, t_train_, eo.propensity_lambda), x_val_);
      break;
    }
  }
}

double MetricEvaluator::score_predictions(std::span<const double> tau_hat) const {
  switch (metric_) {
    case MetricKind::TauRisk: return tau_risk(tau_hat, y_val_, t_val_, m_hat_, p_hat_);
    case MetricKind::NNPEHE: return nn_pehe(tau_hat, x_val_, y_val_, t_val_);
    case MetricKind::PluginTau: return plugin_tau(tau_hat, tau_tilde_);
    case MetricKind::CFCV: return cfcv(tau_hat, y_val_, t_val_, m1_hat_, m0_hat_, p_hat_);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> MetricEvaluator::validation_predictions(const ColumnSet& columns) const {
  const auto est = fit_cate(options_.estimator, x_train_.select_columns(columns), t_train_, y_train_,
                            options_.estimator_options);
  return est.predict(x_val_.select_columns(columns));
}

double MetricEvaluator::score(const ColumnSet& columns) const {
  return score_predictions(validation_predictions(columns));
}

FitMetricReport MetricEvaluator::report(const ColumnSet& columns) const {
  FitMetricReport r;
  r.metric = metric_;
  r.value = score(columns);
  r.split_id = "inner:" + std::to_string(options_.seed) + ":" + std::to_string(validation_rows_.size());
  r.nuisance.outcome_lambda = options_.estimator_options.outcome_lambda;
  r.nuisance.propensity_lambda = options_.estimator_options.propensity_lambda;
  r.nuisance.reference_estimator = std::string(to_string(EstimatorKind::T));
  return r;
}

}  // namespace htefs
