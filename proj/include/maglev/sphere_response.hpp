#pragma once

#include <complex>

#include "maglev/constants.hpp"
#include "maglev/fieldmodel.hpp"

namespace maglev {

/// Levitated sphere; volume and mass are always derived from radius and density.
class SphereParams {
 public:
  SphereParams(double radius, double density);

  double radius() const { return radius_; }
  double density() const { return density_; }
  double volume() const { return 4.0 / 3.0 * constants::pi * radius_ * radius_ * radius_; }
  double mass() const { return density_ * volume(); }

 private:
  double radius_;
  double density_;
};

/// Exterior scalar potential of the screening currents,
///   Phi = sum_{n<=2} r^-(n+1) sum_m a_{n,m} Y_n^m,
/// with orthonormal complex spherical harmonics (Condon-Shortley phase).
/// Coefficients of degree n >= 3 vanish for a quadrupole source.
struct MultipoleSolution {
  std::complex<double> a10, a1m1, a11;  // T m^3
  std::complex<double> a20, a2m2, a22;  // T m^5
  Vec3 offset = Vec3::Zero();
  QuadrupoleField field;
  double radius = 0.0;

  /// a_{n,m}; zero outside n in {1, 2}.
  std::complex<double> coefficient(int n, int m) const;
};

/// Closed-form coefficients enforcing B_r = 0 on the sphere surface for the
/// applied field B0 = (b_x (x + x0), b_y (y + y0), b_z (z + z0)).
MultipoleSolution solve_coefficients(const QuadrupoleField& qf, const Vec3& offset, const SphereParams& sphere);

/// Phi and grad Phi at a point in sphere-centered coordinates. These extend
/// analytically inside the sphere (singular only at the center); callers
/// wanting physical fields should use total_field.
double response_potential(const MultipoleSolution& sol, const Vec3& point);
Vec3 response_gradient(const MultipoleSolution& sol, const Vec3& point);

/// B = B0 - grad Phi; throws InteriorPoint for |point| < R.
Vec3 total_field(const MultipoleSolution& sol, const Vec3& point);

/// F = -(3V / 2 mu0) (b_x^2 x0, b_y^2 y0, b_z^2 z0).
Vec3 force_analytic(const QuadrupoleField& qf, const Vec3& offset, const SphereParams& sphere);

struct StressTensorForce {
  Vec3 force = Vec3::Zero();
  /// Roundoff scale of the surface integral: nodes * eps * integral of |B|^2/2mu0 dS.
  double noise_floor = 0.0;
  int theta_nodes = 0;
  int phi_nodes = 0;
};

/// F = -closed integral of |B|^2/(2 mu0) n dS on the sphere surface, where the
/// field is purely tangential. Product rule: Gauss-Legendre in cos(theta),
/// periodic trapezoid in phi, sqrt(n_quadrature) nodes each (n >= 256).
StressTensorForce force_stress_tensor(const MultipoleSolution& sol, const SphereParams& sphere, int n_quadrature);

struct TrapFrequencies {
  double fx = 0.0, fy = 0.0, fz = 0.0;  // Hz
};

/// f_i = sqrt(3 / (8 pi^2 mu0 rho)) |b_i|; independent of the radius.
TrapFrequencies trap_frequencies(const QuadrupoleField& qf, double density);

/// Angular-frequency-squared stiffness per unit mass along each axis, 3 b_i^2 / (2 mu0 rho).
Vec3 trap_stiffness_per_mass(const QuadrupoleField& qf, double density);

/// z_g = -g / (2 pi f_z)^2. Throws ZeroFrequency for f_z <= 0.
double gravity_sag(double fz, double g = constants::standard_gravity);

}  // namespace maglev
