#include <random>
#include <vector>

#include "doctest.h"
#include "maglev/kernels.hpp"

using namespace maglev::kernels;

TEST_SUITE("kernels") {

TEST_CASE("every available kernel agrees with the scalar sum") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
    std::vector<double> x(n), y(n), z(n), dx(n), dy(n), dz(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = u(rng), y[i] = u(rng), z[i] = u(rng);
      dx[i] = u(rng), dy[i] = u(rng), dz[i] = u(rng);
    }
    const FilamentView view{x, y, z, dx, dy, dz};
    const std::array<double, 3> p{2.5, -1.7, 0.3};
    const auto ref = biot_savart_sum_scalar(view, p);
    for (auto level : {SimdLevel::Scalar, SimdLevel::Avx2, SimdLevel::Neon}) {
      const auto got = biot_savart_kernel(level)(view, p);
      for (int k = 0; k < 3; ++k) CHECK(got[k] == doctest::Approx(ref[k]).epsilon(1e-13));
    }
  }
}

TEST_CASE("level override falls back and restores") {
  const auto original = active_simd_level();
  CHECK(set_simd_level(SimdLevel::Scalar) == SimdLevel::Scalar);
  CHECK(active_simd_level() == SimdLevel::Scalar);
  set_simd_level(original);
  CHECK(active_simd_level() == original);
  CHECK(!simd_level_name(detected_simd_level()).empty());
}

}
