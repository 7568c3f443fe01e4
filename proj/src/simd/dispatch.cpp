#include <cstdlib>
#include <string_view>

#include "polatk/simd/kernels.hpp"

namespace polatk::simd {

#if defined(POLATK_HAVE_AVX2)
const Kernels& avx2_kernels_impl();
#endif

const Kernels* avx2_kernels() {
#if defined(POLATK_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernels_impl() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const Kernels* initial_choice() {
  if (const char* env = std::getenv("POLATK_SIMD")) {
    if (std::string_view(env) == "scalar") return &scalar_kernels();
  }
  if (const Kernels* k = avx2_kernels()) return k;
  return &scalar_kernels();
}

const Kernels*& active() {
  static const Kernels* k = initial_choice();
  return k;
}

}  // namespace

const Kernels& kernels() { return *active(); }

bool select_kernels(std::string_view name) {
  if (name == "scalar") {
    active() = &scalar_kernels();
    return true;
  }
  if (name == "avx2") {
    if (const Kernels* k = avx2_kernels()) {
      active() = k;
      return true;
    }
  }
  return false;
}

}  // namespace polatk::simd
