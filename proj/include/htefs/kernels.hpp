#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and, on
// x86-64, an AVX2/FMA variant; the variant is chosen once at first use.
//
// Selection can be pinned with the HTEFS_SIMD environment variable
// ("scalar", "avx2", or "auto").

#include <cstddef>
#include <span>

namespace htefs::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i w[i] * a[i] * b[i]
  double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // sum_i (x[i] - c)^2
  double (*sum_sq_dev)(const double* x, double c, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  // sum_i (r[i] - w[i] * tau[i])^2
  double (*sum_sq_r_loss)(const double* r, const double* w, const double* tau, std::size_t n);
  // acc[i] += (x[i] - c)^2
  void (*add_sq_dev)(double* acc, const double* x, double c, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

const KernelTable& active_table();

// Overrides the active table; intended for tests and benchmarks.
void set_active_table(const KernelTable& table);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_table().dot(a.data(), b.data(), a.size());
}
inline double weighted_dot(std::span<const double> w, std::span<const double> a,
                           std::span<const double> b) {
  return active_table().weighted_dot(w.data(), a.data(), b.data(), w.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_table().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sum(std::span<const double> x) { return active_table().sum(x.data(), x.size()); }
inline double sum_sq_dev(std::span<const double> x, double c) {
  return active_table().sum_sq_dev(x.data(), c, x.size());
}
inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return active_table().sum_sq_diff(a.data(), b.data(), a.size());
}
inline double sum_sq_r_loss(std::span<const double> r, std::span<const double> w,
                            std::span<const double> tau) {
  return active_table().sum_sq_r_loss(r.data(), w.data(), tau.data(), r.size());
}
inline void add_sq_dev(std::span<double> acc, std::span<const double> x, double c) {
  active_table().add_sq_dev(acc.data(), x.data(), c, x.size());
}

}  // namespace htefs::kernels
