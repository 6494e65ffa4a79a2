#include <cmath>
#include <numbers>

#include "htefs/error.hpp"
#include "htefs/kernels.hpp"
#include "htefs/structure_fit.hpp"
#include "htefs/supervised.hpp"

namespace htefs {
namespace {

std::vector<double> standardized_column(const Matrix& data, std::size_t c) {
  auto col = data.column(c);
  const double n = static_cast<double>(col.size());
  const double mu = kernels::sum(col) / n;
  const double sd = std::sqrt(kernels::sum_sq_dev(col, mu) / n);
  if (!(sd > 1e-12 * (1.0 + std::abs(mu))))
    throw Error(ErrorCode::ConstantColumn, "orientation needs non-constant columns");
  for (auto& v : col) v = (v - mu) / sd;
  return col;
}

// Mean squared residual of regressing `effect` on a cubic in `cause`.
double cubic_fit_error(std::span<const double> cause, std::span<const double> effect) {
  const std::size_t n = cause.size();
  Matrix design(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = cause[i];
    design(i, 0) = v;
    design(i, 1) = v * v;
    design(i, 2) = v * v * v;
  }
  const auto fitted = predict(fit_ridge(design, effect, kReciLambda), design);
  return kernels::sum_sq_diff(effect, fitted) / static_cast<double>(n);
}

double log1pexp(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

// Gaussian log-likelihood of n residuals at their MLE variance.
double gaussian_ll(double sum_sq, double n) {
  const double var = std::max(sum_sq / n, 1e-300);
  return -0.5 * n * (std::log(2.0 * std::numbers::pi * var) + 1.0);
}

bool is_binary(std::span<const double> col) {
  bool zero = false, one = false;
  for (double v : col) {
    if (v == 0.0) zero = true;
    else if (v == 1.0) one = true;
    else return false;
  }
  return zero && one;
}

}  // namespace

OrientationResult orient_reci(const Matrix& data, std::size_t i, std::size_t j) {
  const auto a = standardized_column(data, i);
  const auto b = standardized_column(data, j);
  OrientationResult res;
  res.error_i_to_j = cubic_fit_error(a, b);
  res.error_j_to_i = cubic_fit_error(b, a);
  const double scale = std::max({res.error_i_to_j, res.error_j_to_i, 1e-300});
  if (std::abs(res.error_i_to_j - res.error_j_to_i) <= kReciTieTolerance * scale) {
    res.low_confidence = true;
    res.direction = i < j ? EdgeDirection::IToJ : EdgeDirection::JToI;
  } else {
    res.direction = res.error_i_to_j < res.error_j_to_i ? EdgeDirection::IToJ : EdgeDirection::JToI;
  }
  return res;
}

OrientationResult orient_mixed_pair(const Matrix& data, std::size_t binary, std::size_t continuous) {
  const auto b = data.column(binary);
  const auto c = data.column(continuous);
  if (!is_binary(b)) throw Error(ErrorCode::InvalidArgument, "orient_mixed_pair: first column is not binary");
  const double n = static_cast<double>(b.size());
  const double c_mean = kernels::sum(c) / n;
  if (!(kernels::sum_sq_dev(c, c_mean) > 0.0))
    throw Error(ErrorCode::ConstantColumn, "orientation needs non-constant columns");

  // b -> c: Bernoulli(b) and c | b normal with arm means, shared variance.
  double n1 = 0.0, s1 = 0.0, s0 = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] == 1.0) {
      n1 += 1.0;
      s1 += c[i];
    } else {
      s0 += c[i];
    }
  }
  const double n0 = n - n1;
  const double mu1 = s1 / n1, mu0 = s0 / n0;
  double within = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double d = c[i] - (b[i] == 1.0 ? mu1 : mu0);
    within += d * d;
  }
  const double ll_b_to_c = n1 * std::log(n1 / n) + n0 * std::log(n0 / n) + gaussian_ll(within, n);

  // c -> b: c normal and b | c logistic.
  Matrix xc(b.size(), 1);
  xc.set_column(0, c);
  const auto model = fit_logistic(xc, b, 1e-6);
  double ll_logit = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double s = model.weights[0] + model.weights[1] * c[i];
    ll_logit += b[i] * s - log1pexp(s);
  }
  const double ll_c_to_b = gaussian_ll(kernels::sum_sq_dev(c, c_mean), n) + ll_logit;

  OrientationResult res;
  res.error_i_to_j = -ll_b_to_c / n;
  res.error_j_to_i = -ll_c_to_b / n;
  const double gain = ll_b_to_c - ll_c_to_b;
  res.direction = gain > kMixedPairMargin ? EdgeDirection::IToJ : EdgeDirection::JToI;
  res.low_confidence = std::abs(gain) <= kMixedPairMargin;
  return res;
}

DataOrienter::DataOrienter(const Matrix& data) : data_(data), binary_(data.cols()) {
  for (std::size_t c = 0; c < data.cols(); ++c) binary_[c] = is_binary(data.column(c));
}

OrientationResult DataOrienter::orient(std::size_t i, std::size_t j) const {
  if (binary_[i] && !binary_[j]) return orient_mixed_pair(data_, i, j);
  if (binary_[j] && !binary_[i]) {
    auto r = orient_mixed_pair(data_, j, i);
    r.direction = r.direction == EdgeDirection::IToJ ? EdgeDirection::JToI : EdgeDirection::IToJ;
    std::swap(r.error_i_to_j, r.error_j_to_i);
    return r;
  }
  return orient_reci(data_, i, j);
}

TrueDirectionOrienter::TrueDirectionOrienter(Dag dag, std::vector<NodeId> column_nodes)
    : dag_(std::move(dag)), column_nodes_(std::move(column_nodes)) {}

OrientationResult TrueDirectionOrienter::orient(std::size_t i, std::size_t j) const {
  const NodeId a = column_nodes_[i], b = column_nodes_[j];
  OrientationResult r;
  if (dag_.has_edge(a, b) || (!dag_.has_edge(b, a) && dag_.has_directed_path(a, b))) {
    r.direction = EdgeDirection::IToJ;
  } else if (dag_.has_edge(b, a) || dag_.has_directed_path(b, a)) {
    r.direction = EdgeDirection::JToI;
  } else {
    r.direction = i < j ? EdgeDirection::IToJ : EdgeDirection::JToI;
    r.low_confidence = true;
  }
  return r;
}

}  // namespace htefs
