#include <atomic>
#include <cstdlib>

#include "erpmvs/simd/kernels.hpp"

namespace erpmvs::simd {
namespace {

const Kernels* detect() {
  if (std::getenv("ERPMVS_FORCE_SCALAR") != nullptr) return &scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
#if defined(__GNUC__) || defined(__clang__)
  if (__builtin_cpu_supports("avx2")) return &avx2_kernels();
#endif
#endif
  return &scalar_kernels();
}

std::atomic<const Kernels*> g_override{nullptr};

}  // namespace

bool avx2_available() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Kernels& active_kernels() {
  const Kernels* o = g_override.load(std::memory_order_acquire);
  if (o != nullptr) return *o;
  static const Kernels* detected = detect();
  return *detected;
}

void override_kernels(const Kernels* k) {
  g_override.store(k, std::memory_order_release);
}

}  // namespace erpmvs::simd
