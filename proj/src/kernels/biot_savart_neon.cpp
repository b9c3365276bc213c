#include <arm_neon.h>

#include <cmath>

#include "maglev/kernels.hpp"

namespace maglev::kernels {

std::array<double, 3> biot_savart_sum_neon(const FilamentView& f, const std::array<double, 3>& p) {
  const std::size_t n = f.size();
  const float64x2_t px = vdupq_n_f64(p[0]);
  const float64x2_t py = vdupq_n_f64(p[1]);
  const float64x2_t pz = vdupq_n_f64(p[2]);
  const float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t accx = vdupq_n_f64(0.0);
  float64x2_t accy = vdupq_n_f64(0.0);
  float64x2_t accz = vdupq_n_f64(0.0);

  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t rx = vsubq_f64(px, vld1q_f64(f.x.data() + i));
    const float64x2_t ry = vsubq_f64(py, vld1q_f64(f.y.data() + i));
    const float64x2_t rz = vsubq_f64(pz, vld1q_f64(f.z.data() + i));
    const float64x2_t dlx = vld1q_f64(f.dlx.data() + i);
    const float64x2_t dly = vld1q_f64(f.dly.data() + i);
    const float64x2_t dlz = vld1q_f64(f.dlz.data() + i);

    float64x2_t r2 = vmulq_f64(rx, rx);
    r2 = vfmaq_f64(r2, ry, ry);
    r2 = vfmaq_f64(r2, rz, rz);
    const float64x2_t inv_r3 = vdivq_f64(one, vmulq_f64(r2, vsqrtq_f64(r2)));

    const float64x2_t cx = vfmsq_f64(vmulq_f64(dly, rz), dlz, ry);
    const float64x2_t cy = vfmsq_f64(vmulq_f64(dlz, rx), dlx, rz);
    const float64x2_t cz = vfmsq_f64(vmulq_f64(dlx, ry), dly, rx);
    accx = vfmaq_f64(accx, cx, inv_r3);
    accy = vfmaq_f64(accy, cy, inv_r3);
    accz = vfmaq_f64(accz, cz, inv_r3);
  }

  double bx = vaddvq_f64(accx), by = vaddvq_f64(accy), bz = vaddvq_f64(accz);
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
