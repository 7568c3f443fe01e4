#include "polatk/simd/kernels.hpp"

namespace polatk::simd {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = a * x[i];
    y[i] = y[i] + t;
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int k = 0; k < 4; ++k) {
      const double t = x[i + k] * y[i + k];
      lane[k] = lane[k] + t;
    }
  }
  for (int k = 0; i < n; ++i, ++k) {
    const double t = x[i] * y[i];
    lane[k] = lane[k] + t;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void scale(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void stokes_from_raw(const double* i0, const double* i45, const double* i90, const double* i135,
                     double* s0, double* s1, double* s2, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double sum = (i0[i] + i45[i]) + (i90[i] + i135[i]);
    s0[i] = 0.5 * sum;
    s1[i] = i0[i] - i90[i];
    s2[i] = i45[i] - i135[i];
  }
}

void sense(const double* s0, const double* s1, const double* s2,
           double* i0, double* i45, double* i90, double* i135, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    i0[i] = 0.5 * (s0[i] + s1[i]);
    i45[i] = 0.5 * (s0[i] + s2[i]);
    i90[i] = 0.5 * (s0[i] - s1[i]);
    i135[i] = 0.5 * (s0[i] - s2[i]);
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{"scalar", axpy, dot, scale, stokes_from_raw, sense};
  return k;
}

}  // namespace polatk::simd
