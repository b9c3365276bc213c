// Compiled with -mavx2 -mfma; only reached through the dispatcher after a
// CPU feature check.
#include <immintrin.h>

#include <cmath>

#include "maglev/kernels.hpp"

namespace maglev::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

std::array<double, 3> biot_savart_sum_avx2(const FilamentView& f, const std::array<double, 3>& p) {
  const std::size_t n = f.size();
  const __m256d px = _mm256_set1_pd(p[0]);
  const __m256d py = _mm256_set1_pd(p[1]);
  const __m256d pz = _mm256_set1_pd(p[2]);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d accx = _mm256_setzero_pd();
  __m256d accy = _mm256_setzero_pd();
  __m256d accz = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rx = _mm256_sub_pd(px, _mm256_loadu_pd(f.x.data() + i));
    const __m256d ry = _mm256_sub_pd(py, _mm256_loadu_pd(f.y.data() + i));
    const __m256d rz = _mm256_sub_pd(pz, _mm256_loadu_pd(f.z.data() + i));
    const __m256d dlx = _mm256_loadu_pd(f.dlx.data() + i);
    const __m256d dly = _mm256_loadu_pd(f.dly.data() + i);
    const __m256d dlz = _mm256_loadu_pd(f.dlz.data() + i);

    __m256d r2 = _mm256_mul_pd(rx, rx);
    r2 = _mm256_fmadd_pd(ry, ry, r2);
    r2 = _mm256_fmadd_pd(rz, rz, r2);
    // Full-precision sqrt and divide; no rcp approximations.
    const __m256d inv_r3 = _mm256_div_pd(one, _mm256_mul_pd(r2, _mm256_sqrt_pd(r2)));

    const __m256d cx = _mm256_fmsub_pd(dly, rz, _mm256_mul_pd(dlz, ry));
    const __m256d cy = _mm256_fmsub_pd(dlz, rx, _mm256_mul_pd(dlx, rz));
    const __m256d cz = _mm256_fmsub_pd(dlx, ry, _mm256_mul_pd(dly, rx));
    accx = _mm256_fmadd_pd(cx, inv_r3, accx);
    accy = _mm256_fmadd_pd(cy, inv_r3, accy);
    accz = _mm256_fmadd_pd(cz, inv_r3, accz);
  }

  double bx = hsum(accx), by = hsum(accy), bz = hsum(accz);
  for (; i < n; ++i) {
    const double rx = p[0] - f.x[i];
    const double ry = p[1] - f.y[i];
    const double rz = p[2] - f.z[i];
    const double r2 = rx * rx + ry * ry + rz * rz;
    const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
    bx += (f.dly[i] * rz - f.dlz[i] * ry) * inv_r3;
    by += (f.dlz[i] * rx - f.dlx[i] * rz) * inv_r3;
    bz += (f.dlx[i] * ry - f.dly[i] * rx) * inv_r3;
  }
  return {bx, by, bz};
}

}  // namespace maglev::kernels
