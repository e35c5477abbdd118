// Compiled with -mavx2 (no -mfma: contraction would change rounding vs the
// scalar reference). Only reached through the dispatcher after a CPUID check.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "erpmvs/simd/kernels.hpp"

namespace erpmvs::simd {
namespace {

void blend4_avx2(const float* p00, const float* p01, const float* p10,
                 const float* p11, float w00, float w01, float w10, float w11,
                 float* out, std::size_t n) {
  const __m256 vw00 = _mm256_set1_ps(w00);
  const __m256 vw01 = _mm256_set1_ps(w01);
  const __m256 vw10 = _mm256_set1_ps(w10);
  const __m256 vw11 = _mm256_set1_ps(w11);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_mul_ps(_mm256_loadu_ps(p00 + i), vw00);
    t = _mm256_add_ps(t, _mm256_mul_ps(_mm256_loadu_ps(p01 + i), vw01));
    t = _mm256_add_ps(t, _mm256_mul_ps(_mm256_loadu_ps(p10 + i), vw10));
    t = _mm256_add_ps(t, _mm256_mul_ps(_mm256_loadu_ps(p11 + i), vw11));
    _mm256_storeu_ps(out + i, t);
  }
  for (; i < n; ++i) {
    float t = p00[i] * w00;
    t += p01[i] * w01;
    t += p10[i] * w10;
    t += p11[i] * w11;
    out[i] = t;
  }
}

void axpy_avx2(float a, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 t = _mm256_add_ps(_mm256_loadu_ps(y + i),
                                   _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    _mm256_storeu_ps(y + i, t);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void add_avx2(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i,
                     _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void relu_avx2(float* x, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void avg4_avx2(const float* a, const float* b, const float* c, const float* d,
               float s, float* out, std::size_t n) {
  const __m256 vs = _mm256_set1_ps(s);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    t = _mm256_add_ps(t, _mm256_loadu_ps(c + i));
    t = _mm256_add_ps(t, _mm256_loadu_ps(d + i));
    _mm256_storeu_ps(out + i, _mm256_mul_ps(t, vs));
  }
  for (; i < n; ++i) {
    float t = a[i] + b[i];
    t += c[i];
    t += d[i];
    out[i] = t * s;
  }
}

}  // namespace

const Kernels& avx2_kernels() {
  static const Kernels k = {blend4_avx2, axpy_avx2, add_avx2, relu_avx2,
                            avg4_avx2, "avx2"};
  return k;
}

}  // namespace erpmvs::simd

#endif  // x86_64
