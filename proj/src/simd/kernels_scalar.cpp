#include "erpmvs/simd/kernels.hpp"

namespace erpmvs::simd {
namespace {

void blend4_scalar(const float* p00, const float* p01, const float* p10,
                   const float* p11, float w00, float w01, float w10, float w11,
                   float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    float t = p00[i] * w00;
    t += p01[i] * w01;
    t += p10[i] * w10;
    t += p11[i] * w11;
    out[i] = t;
  }
}

void axpy_scalar(float a, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_scalar(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void relu_scalar(float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void avg4_scalar(const float* a, const float* b, const float* c, const float* d,
                 float s, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    float t = a[i] + b[i];
    t += c[i];
    t += d[i];
    out[i] = t * s;
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k = {blend4_scalar, axpy_scalar, add_scalar, relu_scalar,
                            avg4_scalar, "scalar"};
  return k;
}

}  // namespace erpmvs::simd
