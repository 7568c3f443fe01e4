// AVX2 variants of the scalar kernels. Compiled with -mavx2 only (no -mfma).

#include <immintrin.h>

#include "polatk/simd/kernels.hpp"

namespace polatk::simd {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (; i < n; ++i) {
    const double t = a * x[i];
    y[i] = y[i] + t;
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (int k = 0; i < n; ++i, ++k) {
    const double t = x[i] * y[i];
    lane[k] = lane[k] + t;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void scale(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

void stokes_from_raw(const double* i0, const double* i45, const double* i90, const double* i135,
                     double* s0, double* s1, double* s2, std::size_t n) {
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(i0 + i);
    const __m256d b = _mm256_loadu_pd(i45 + i);
    const __m256d c = _mm256_loadu_pd(i90 + i);
    const __m256d d = _mm256_loadu_pd(i135 + i);
    const __m256d sum = _mm256_add_pd(_mm256_add_pd(a, b), _mm256_add_pd(c, d));
    _mm256_storeu_pd(s0 + i, _mm256_mul_pd(half, sum));
    _mm256_storeu_pd(s1 + i, _mm256_sub_pd(a, c));
    _mm256_storeu_pd(s2 + i, _mm256_sub_pd(b, d));
  }
  for (; i < n; ++i) {
    const double sum = (i0[i] + i45[i]) + (i90[i] + i135[i]);
    s0[i] = 0.5 * sum;
    s1[i] = i0[i] - i90[i];
    s2[i] = i45[i] - i135[i];
  }
}

void sense(const double* s0, const double* s1, const double* s2,
           double* i0, double* i45, double* i90, double* i135, std::size_t n) {
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(s0 + i);
    const __m256d b = _mm256_loadu_pd(s1 + i);
    const __m256d c = _mm256_loadu_pd(s2 + i);
    _mm256_storeu_pd(i0 + i, _mm256_mul_pd(half, _mm256_add_pd(a, b)));
    _mm256_storeu_pd(i45 + i, _mm256_mul_pd(half, _mm256_add_pd(a, c)));
    _mm256_storeu_pd(i90 + i, _mm256_mul_pd(half, _mm256_sub_pd(a, b)));
    _mm256_storeu_pd(i135 + i, _mm256_mul_pd(half, _mm256_sub_pd(a, c)));
  }
  for (; i < n; ++i) {
    i0[i] = 0.5 * (s0[i] + s1[i]);
    i45[i] = 0.5 * (s0[i] + s2[i]);
    i90[i] = 0.5 * (s0[i] - s1[i]);
    i135[i] = 0.5 * (s0[i] - s2[i]);
  }
}

}  // namespace

const Kernels& avx2_kernels_impl() {
  static const Kernels k{"avx2", axpy, dot, scale, stokes_from_raw, sense};
  return k;
}

}  // namespace polatk::simd
