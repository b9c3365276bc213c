#include <atomic>
#include <cstdlib>
#include <string_view>

#include "maglev/kernels.hpp"

namespace maglev::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(MAGLEV_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

SimdLevel initial_level() {
  if (const char* env = std::getenv("MAGLEV_SIMD")) {
    if (std::string_view(env) == "scalar") return SimdLevel::Scalar;
  }
  return detected_simd_level();
}

std::atomic<BiotSavartSumFn>& active_kernel() {
  static std::atomic<BiotSavartSumFn> fn{biot_savart_kernel(initial_level())};
  return fn;
}

std::atomic<SimdLevel>& active_level_slot() {
  static std::atomic<SimdLevel> level{initial_level()};
  return level;
}

}  // namespace

std::string_view simd_level_name(SimdLevel level) {
  switch (level) {
    case SimdLevel::Scalar: return "scalar";
    case SimdLevel::Avx2: return "avx2";
    case SimdLevel::Neon: return "neon";
  }
  return "scalar";
}

SimdLevel detected_simd_level() {
#if defined(MAGLEV_BUILD_NEON)
  return SimdLevel::Neon;
#else
  return cpu_has_avx2() ? SimdLevel::Avx2 : SimdLevel::Scalar;
#endif
}

BiotSavartSumFn biot_savart_kernel(SimdLevel level) {
  switch (level) {
#if defined(MAGLEV_BUILD_AVX2)
    case SimdLevel::Avx2:
      if (cpu_has_avx2()) return &biot_savart_sum_avx2;
      break;
#endif
#if defined(MAGLEV_BUILD_NEON)
    case SimdLevel::Neon: return &biot_savart_sum_neon;
#endif
    default: break;
  }
  return &biot_savart_sum_scalar;
}

SimdLevel active_simd_level() { return active_level_slot().load(); }

SimdLevel set_simd_level(SimdLevel level) {
  const BiotSavartSumFn fn = biot_savart_kernel(level);
  const SimdLevel actual = (fn == &biot_savart_sum_scalar) ? SimdLevel::Scalar : level;
  active_kernel().store(fn);
  active_level_slot().store(actual);
  return actual;
}

std::array<double, 3> biot_savart_sum(const FilamentView& filament, const std::array<double, 3>& point) {
  return active_kernel().load(std::memory_order_relaxed)(filament, point);
}

}  // namespace maglev::kernels
