#pragma once

#include <cstddef>

namespace erpmvs::simd {

// Data-parallel inner-loop kernels. Every entry has a scalar reference
// implementation and may have ISA-specific variants selected at runtime.
// Variants are required to be bit-identical to the scalar reference: same
// expression trees, no FMA contraction, no reassociated reductions. The
// equivalence test suite asserts this exactly, so results never depend on
// which variant the dispatcher picked.
struct Kernels {
  // out[i] = ((p00[i]*w00 + p01[i]*w01) + p10[i]*w10) + p11[i]*w11
  // The four-corner blend of bilinear interpolation over a channel run.
  void (*blend4)(const float* p00, const float* p01, const float* p10,
                 const float* p11, float w00, float w01, float w10, float w11,
                 float* out, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(float a, const float* x, float* y, std::size_t n);
  // out[i] = a[i] + b[i]
  void (*add)(const float* a, const float* b, float* out, std::size_t n);
  // x[i] = max(x[i], 0)
  void (*relu)(float* x, std::size_t n);
  // out[i] = (a[i] + b[i] + c[i] + d[i]) * s   (2x2 average pooling row step)
  void (*avg4)(const float* a, const float* b, const float* c, const float* d,
               float s, float* out, std::size_t n);

  const char* name;
};

const Kernels& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();
#endif

// True when the running CPU can execute the avx2 variant.
bool avx2_available();

// Kernel set picked at startup: AVX2 when the CPU supports it, scalar
// otherwise or when ERPMVS_FORCE_SCALAR is set in the environment.
const Kernels& active_kernels();

// Test hook; pass nullptr to restore the startup choice.
void override_kernels(const Kernels* k);

}  // namespace erpmvs::simd
