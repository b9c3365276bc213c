#include "maglev/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "maglev/error.hpp"

namespace maglev {

QuadratureRule gauss_legendre(int n, double lo, double hi) {
  require(n >= 1, "gauss_legendre needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  // Legendre P_n and P_{n-1} at x by the three-term recurrence.
  auto legendre = [n](double x, double& p_prev) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    p_prev = p0;
    return p1;
  };
  // Roots are symmetric; Newton from the Tricomi initial guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p_prev = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double p = legendre(x, p_prev);
      const double dp = n * (x * p - p_prev) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double p = legendre(x, p_prev);
    const double dp = n * (x * p - p_prev) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

}  // namespace maglev
