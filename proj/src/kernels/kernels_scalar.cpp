#include "htefs/kernels.hpp"

namespace htefs::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double sum_sq_dev_scalar(const double* x, double c, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - c;
    s += d * d;
  }
  return s;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_sq_r_loss_scalar(const double* r, const double* w, const double* tau, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = r[i] - w[i] * tau[i];
    s += d * d;
  }
  return s;
}

void add_sq_dev_scalar(double* acc, const double* x, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - c;
    acc[i] += d * d;
  }
}

constexpr KernelTable kScalar{
    "scalar",          dot_scalar,         weighted_dot_scalar,  axpy_scalar,
    sum_scalar,        sum_sq_dev_scalar,  sum_sq_diff_scalar,   sum_sq_r_loss_scalar,
    add_sq_dev_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace htefs::kernels
