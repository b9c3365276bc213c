#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace maglev::kernels {

/// Discretized current filament in structure-of-arrays layout. Each node i
/// carries a source point (x, y, z) and a quadrature-weighted line element
/// (dlx, dly, dlz) that already includes the current and any rule weight.
struct FilamentView {
  std::span<const double> x, y, z;
  std::span<const double> dlx, dly, dlz;

  std::size_t size() const { return x.size(); }
};

/// Returns sum_i dl_i x (p - r_i) / |p - r_i|^3 (no mu0/4pi prefactor).
using BiotSavartSumFn = std::array<double, 3> (*)(const FilamentView&, const std::array<double, 3>&);

enum class SimdLevel { Scalar, Avx2, Neon };

std::string_view simd_level_name(SimdLevel level);

/// Best level supported by both this build and the running CPU.
SimdLevel detected_simd_level();

/// Level used by `biot_savart_sum`. Defaults to detected_simd_level(), or to
/// Scalar when MAGLEV_SIMD=scalar is set in the environment.
SimdLevel active_simd_level();

/// Overrides the active level (tests and benchmarks). Requesting a level the
/// build or CPU cannot run falls back to Scalar; the level actually in use is
/// returned.
SimdLevel set_simd_level(SimdLevel level);

std::array<double, 3> biot_savart_sum_scalar(const FilamentView& filament, const std::array<double, 3>& point);
#if defined(MAGLEV_BUILD_AVX2)
std::array<double, 3> biot_savart_sum_avx2(const FilamentView& filament, const std::array<double, 3>& point);
#endif
#if defined(MAGLEV_BUILD_NEON)
std::array<double, 3> biot_savart_sum_neon(const FilamentView& filament, const std::array<double, 3>& point);
#endif

/// Dispatching entry point.
std::array<double, 3> biot_savart_sum(const FilamentView& filament, const std::array<double, 3>& point);

/// Kernel for an explicit level; Scalar when the level is unavailable.
BiotSavartSumFn biot_savart_kernel(SimdLevel level);

}  // namespace maglev::kernels
