#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
//
// Both variants produce bitwise-identical results: no fused multiply-add,
// and every reduction uses the same four-lane accumulator layout followed by
// the fixed tree (l0 + l1) + (l2 + l3). The active table is chosen once at
// startup from CPU features and may be forced with POLATK_SIMD=scalar|avx2.

#include <cstddef>
#include <string_view>

namespace polatk::simd {

struct Kernels {
  const char* name;

  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// Sum of x[i] * y[i] in four interleaved lanes.
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y[i] = a * x[i]
  void (*scale)(double a, const double* x, double* y, std::size_t n);
  /// s0 = (i0+i45+i90+i135)/2, s1 = i0-i90, s2 = i45-i135
  void (*stokes_from_raw)(const double* i0, const double* i45, const double* i90, const double* i135,
                          double* s0, double* s1, double* s2, std::size_t n);
  /// Ideal polarizer responses at 0, pi/4, pi/2, 3pi/4.
  void (*sense)(const double* s0, const double* s1, const double* s2,
                double* i0, double* i45, double* i90, double* i135, std::size_t n);
};

const Kernels& scalar_kernels();
/// nullptr when not compiled in or unsupported by the running CPU.
const Kernels* avx2_kernels();

/// The active table.
const Kernels& kernels();

/// Force a table by name ("scalar" or "avx2"); returns false if unavailable.
bool select_kernels(std::string_view name);

}  // namespace polatk::simd
