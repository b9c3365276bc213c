#include <cmath>

#include "maglev/kernels.hpp"

namespace maglev::kernels {

std::array<double, 3> biot_savart_sum_scalar(const FilamentView& f, const std::array<double, 3>& p) {
  double bx = 0.0, by = 0.0, bz = 0.0;
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) {
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
