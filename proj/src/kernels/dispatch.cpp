#include <atomic>
#include <cstdlib>
#include <string_view>

#include "htefs/error.hpp"
#include "htefs/kernels.hpp"

namespace htefs::kernels {

#if defined(HTEFS_HAVE_AVX2)
const KernelTable* avx2_table_unchecked();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(HTEFS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* choose() {
  const char* env = std::getenv("HTEFS_SIMD");
  const std::string_view mode = env ? env : "auto";
  if (mode == "scalar") return &scalar_table();
  const KernelTable* simd = avx2_table();
  if (mode == "avx2" && !simd) log_warning("HTEFS_SIMD=avx2 requested but unavailable; using scalar");
  return simd ? simd : &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> active{choose()};
  return active;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(HTEFS_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_table() { return *slot().load(std::memory_order_relaxed); }

void set_active_table(const KernelTable& table) { slot().store(&table); }

}  // namespace htefs::kernels
