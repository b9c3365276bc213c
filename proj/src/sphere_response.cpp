#include "maglev/sphere_response.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "maglev/error.hpp"
#include "maglev/quadrature.hpp"

namespace maglev {

using cplx = std::complex<double>;

SphereParams::SphereParams(double radius, double density) : radius_(radius), density_(density) {
  require(radius > 0.0 && std::isfinite(radius), "sphere radius must be positive");
  require(density > 0.0 && std::isfinite(density), "sphere density must be positive");
}

cplx MultipoleSolution::coefficient(int n, int m) const {
  if (n == 1) {
    if (m == 0) return a10;
    if (m == -1) return a1m1;
    if (m == 1) return a11;
  } else if (n == 2) {
    if (m == 0) return a20;
    if (m == -2) return a2m2;
    if (m == 2) return a22;
  }
  return {0.0, 0.0};
}

MultipoleSolution solve_coefficients(const QuadrupoleField& qf, const Vec3& offset, const SphereParams& sphere) {
  using constants::pi;
  const double r3 = std::pow(sphere.radius(), 3);
  const double r5 = std::pow(sphere.radius(), 5);
  const double ux = qf.bx() * offset.x();
  const double uy = qf.by() * offset.y();

  MultipoleSolution sol;
  sol.a10 = -qf.bz() * std::sqrt(pi / 3.0) * r3 * offset.z();
  sol.a1m1 = -std::sqrt(pi / 6.0) * r3 * cplx(ux, uy);
  sol.a11 = std::sqrt(pi / 6.0) * r3 * cplx(ux, -uy);
  sol.a20 = -qf.bz() * std::sqrt(4.0 * pi / 45.0) * r5;
  sol.a2m2 = (qf.by() - qf.bx()) * std::sqrt(2.0 * pi / 135.0) * r5;
  sol.a22 = sol.a2m2;
  sol.offset = offset;
  sol.field = qf;
  sol.radius = sphere.radius();
  return sol;
}

namespace {

// Regular solid harmonics r^n Y_n^m and their gradients, orthonormal with the
// Condon-Shortley phase, for n = 1, 2.
struct SolidHarmonic {
  cplx value;
  std::array<cplx, 3> grad;
};

SolidHarmonic solid_harmonic(int n, int m, const Vec3& p) {
  using constants::pi;
  const double x = p.x(), y = p.y(), z = p.z();
  const cplx i(0.0, 1.0);
  const double sgn = m >= 0 ? 1.0 : -1.0;
  const cplx w(x, sgn * y);  // x +/- i y
  const cplx dw_dy = sgn * i;
  if (n == 1) {
    if (m == 0) {
      const double c = std::sqrt(3.0 / (4.0 * pi));
      return {c * z, {0.0, 0.0, c}};
    }
    const double c = -sgn * std::sqrt(3.0 / (8.0 * pi));
    return {c * w, {c, c * dw_dy, 0.0}};
  }
  if (m == 0) {
    const double c = std::sqrt(5.0 / (16.0 * pi));
    return {c * (2.0 * z * z - x * x - y * y), {-2.0 * c * x, -2.0 * c * y, 4.0 * c * z}};
  }
  if (m == 1 || m == -1) {
    const double c = -sgn * std::sqrt(15.0 / (8.0 * pi));
    return {c * z * w, {c * z, c * z * dw_dy, c * w}};
  }
  const double c = std::sqrt(15.0 / (32.0 * pi));
  return {c * w * w, {2.0 * c * w, 2.0 * c * w * dw_dy, 0.0}};
}

constexpr std::array<std::array<int, 2>, 6> kTerms{{{1, -1}, {1, 0}, {1, 1}, {2, -2}, {2, 0}, {2, 2}}};

}  // namespace

double response_potential(const MultipoleSolution& sol, const Vec3& point) {
  const double r = point.norm();
  cplx phi = 0.0;
  for (const auto& [n, m] : kTerms) {
    const cplx a = sol.coefficient(n, m);
    if (a == cplx(0.0, 0.0)) continue;
    phi += a * solid_harmonic(n, m, point).value / std::pow(r, 2 * n + 1);
  }
  return phi.real();
}

Vec3 response_gradient(const MultipoleSolution& sol, const Vec3& point) {
  const double r = point.norm();
  const double r2 = r * r;
  std::array<cplx, 3> g{0.0, 0.0, 0.0};
  for (const auto& [n, m] : kTerms) {
    const cplx a = sol.coefficient(n, m);
    if (a == cplx(0.0, 0.0)) continue;
    const auto h = solid_harmonic(n, m, point);
    const double inv = 1.0 / std::pow(r, 2 * n + 1);
    const double radial = (2 * n + 1) / r2;
    for (int k = 0; k < 3; ++k) {
      g[k] += a * inv * (h.grad[k] - radial * h.value * point[k]);
    }
  }
  return {g[0].real(), g[1].real(), g[2].real()};
}

Vec3 total_field(const MultipoleSolution& sol, const Vec3& point) {
  if (point.norm() < sol.radius * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "point at |r| = " << point.norm() << " m is inside the sphere of radius " << sol.radius << " m";
    fail(ErrorCode::InteriorPoint, msg.str());
  }
  return quadrupole_field(sol.field, sol.offset, point) - response_gradient(sol, point);
}

Vec3 force_analytic(const QuadrupoleField& qf, const Vec3& offset, const SphereParams& sphere) {
  const double pref = -3.0 * sphere.volume() / (2.0 * constants::mu0);
  return pref * Vec3(qf.bx() * qf.bx() * offset.x(), qf.by() * qf.by() * offset.y(), qf.bz() * qf.bz() * offset.z());
}

StressTensorForce force_stress_tensor(const MultipoleSolution& sol, const SphereParams& sphere, int n_quadrature) {
  require(n_quadrature >= 256, "stress-tensor quadrature needs at least 16^2 surface nodes");
  const int n_theta = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_quadrature))));
  const int n_phi = n_theta;
  const double radius = sphere.radius();
  const auto rule = gauss_legendre(n_theta, -1.0, 1.0);
  const double dphi = 2.0 * constants::pi / n_phi;

  Vec3 force = Vec3::Zero();
  double pressure_integral = 0.0;
  for (int i = 0; i < n_theta; ++i) {
    const double ct = rule.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = dphi * (j + 0.5);
      const Vec3 n(st * std::cos(phi), st * std::sin(phi), ct);
      const Vec3 b = total_field(sol, radius * n);
      const double pressure = b.squaredNorm() / (2.0 * constants::mu0);
      const double w = rule.weights[i] * dphi * radius * radius;
      force -= pressure * w * n;
      pressure_integral += pressure * w;
    }
  }
  StressTensorForce out;
  out.force = force;
  out.theta_nodes = n_theta;
  out.phi_nodes = n_phi;
  out.noise_floor = n_theta * n_phi * std::numeric_limits<double>::epsilon() * pressure_integral;
  return out;
}

TrapFrequencies trap_frequencies(const QuadrupoleField& qf, double density) {
  require(density > 0.0, "density must be positive");
  const double pref = std::sqrt(3.0 / (8.0 * constants::pi * constants::pi * constants::mu0 * density));
  return {pref * std::abs(qf.bx()), pref * std::abs(qf.by()), pref * std::abs(qf.bz())};
}

Vec3 trap_stiffness_per_mass(const QuadrupoleField& qf, double density) {
  require(density > 0.0, "density must be positive");
  const double pref = 3.0 / (2.0 * constants::mu0 * density);
  return pref * Vec3(qf.bx() * qf.bx(), qf.by() * qf.by(), qf.bz() * qf.bz());
}

double gravity_sag(double fz, double g) {
  if (!(fz > 0.0)) fail(ErrorCode::ZeroFrequency, "gravity sag needs a positive axial frequency");
  const double w = 2.0 * constants::pi * fz;
  return -g / (w * w);
}

}  // namespace maglev
