#include <cmath>
#include <random>

#include "doctest.h"
#include "maglev/error.hpp"
#include "maglev/sphere_response.hpp"

using namespace maglev;

namespace {

const SphereParams kSphere(50e-6, 10.9e3);
const auto kField = QuadrupoleField::from_magnitudes(57, 90, 147);

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

}  // namespace

TEST_SUITE("sphere_response") {

TEST_CASE("derived mass and volume") {
  CHECK(kSphere.volume() == doctest::Approx(4.0 / 3.0 * constants::pi * std::pow(50e-6, 3)));
  CHECK(kSphere.mass() == doctest::Approx(5.707e-9).epsilon(1e-3));
  CHECK_THROWS_AS(SphereParams(-1.0, 1.0), Error);
}

TEST_CASE("radial field vanishes on the surface") {
  std::mt19937_64 rng(11);
  for (const Vec3& offset : {Vec3(0, 0, 0), Vec3(3e-6, -2e-6, 8e-6), Vec3(-1e-5, 0, -4e-6)}) {
    const auto sol = solve_coefficients(kField, offset, kSphere);
    for (int i = 0; i < 200; ++i) {
      const Vec3 n = random_unit(rng);
      const Vec3 b = total_field(sol, kSphere.radius() * n);
      const double scale = quadrupole_field(kField, offset, kSphere.radius() * n).norm() + b.norm();
      CHECK(std::abs(b.dot(n)) < 1e-10 * scale);
    }
  }
}

TEST_CASE("response potential is harmonic and decays like a multipole") {
  const auto sol = solve_coefficients(kField, Vec3(2e-6, 1e-6, -3e-6), kSphere);
  CHECK(sol.coefficient(3, 0) == std::complex<double>(0.0));
  const Vec3 p(70e-6, -30e-6, 40e-6);
  const double h = 1e-7;
  double lap = 0.0;
  for (int k = 0; k < 3; ++k) {
    Vec3 d = Vec3::Zero();
    d[k] = h;
    lap += response_potential(sol, p + d) - 2.0 * response_potential(sol, p) + response_potential(sol, p - d);
  }
  lap /= h * h;
  const double scale = response_gradient(sol, p).norm() / p.norm();
  CHECK(std::abs(lap) < 1e-4 * scale);

  Vec3 fd;
  const double hg = 1e-9;
  for (int k = 0; k < 3; ++k) {
    Vec3 d = Vec3::Zero();
    d[k] = hg;
    fd[k] = (response_potential(sol, p + d) - response_potential(sol, p - d)) / (2 * hg);
  }
  CHECK((fd - response_gradient(sol, p)).norm() < 1e-6 * fd.norm());

  const double r1 = response_gradient(sol, 2e-3 * p.normalized()).norm();
  const double r2 = response_gradient(sol, 4e-3 * p.normalized()).norm();
  CHECK(r1 / r2 > 7.0);  // at least dipole decay, r^-3
}

TEST_CASE("interior points are rejected") {
  const auto sol = solve_coefficients(kField, Vec3::Zero(), kSphere);
  try {
    total_field(sol, Vec3(0, 0, 10e-6));
    FAIL("expected InteriorPoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InteriorPoint);
  }
}

TEST_CASE("stress-tensor force matches the analytic force law") {
  const double R = kSphere.radius();
  for (const Vec3& offset : {Vec3(0.2 * R, 0, 0), Vec3(0, -0.1 * R, 0), Vec3(0.05 * R, 0.07 * R, -0.15 * R),
                             Vec3(0, 0, 0.2 * R)}) {
    const auto sol = solve_coefficients(kField, offset, kSphere);
    const auto st = force_stress_tensor(sol, kSphere, 1024);
    const Vec3 fa = force_analytic(kField, offset, kSphere);
    CHECK((st.force - fa).norm() < 1e-3 * fa.norm());
  }
  const auto centered = force_stress_tensor(solve_coefficients(kField, Vec3::Zero(), kSphere), kSphere, 1024);
  CHECK(centered.force.norm() <= 10 * centered.noise_floor);
  CHECK_THROWS_AS(force_stress_tensor(solve_coefficients(kField, Vec3::Zero(), kSphere), kSphere, 64), Error);
}

TEST_CASE("trap frequencies follow from the stiffness") {
  const auto f = trap_frequencies(kField, 10.9e3);
  const Vec3 k = trap_stiffness_per_mass(kField, 10.9e3);
  CHECK(f.fz == doctest::Approx(std::sqrt(k.z()) / (2 * constants::pi)));
  // Stiffness from the force law divided by mass.
  const Vec3 fa = force_analytic(kField, Vec3(0, 0, 1e-9), kSphere);
  CHECK(-fa.z() / 1e-9 / kSphere.mass() == doctest::Approx(k.z()).epsilon(1e-12));
  CHECK(f.fx / f.fz == doctest::Approx(57.0 / 147.0));
  // Independent of the radius.
  const SphereParams big(1e-3, 10.9e3);
  const Vec3 fb = force_analytic(kField, Vec3(1e-9, 0, 0), big);
  CHECK(-fb.x() / 1e-9 / big.mass() == doctest::Approx(k.x()).epsilon(1e-12));
}

TEST_CASE("gravity sag") {
  CHECK(gravity_sag(100.0) == doctest::Approx(-9.81 / std::pow(2 * constants::pi * 100, 2)));
  CHECK(gravity_sag(100.0, 1.62) == doctest::Approx(-1.62 / std::pow(2 * constants::pi * 100, 2)));
  try {
    gravity_sag(0.0);
    FAIL("expected ZeroFrequency");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroFrequency);
  }
}

}

TEST_SUITE("sphere_response") {

TEST_CASE("coefficients describe a real field") {
  const auto sol = solve_coefficients(kField, Vec3(3e-6, -1e-6, 2e-6), kSphere);
  CHECK(std::abs(sol.a11 + std::conj(sol.a1m1)) < 1e-12 * std::abs(sol.a11));
  CHECK(std::abs(sol.a22 - sol.a2m2) < 1e-12 * std::abs(sol.a22));
  CHECK(sol.coefficient(0, 0) == std::complex<double>(0.0));
  CHECK(sol.coefficient(4, 2) == std::complex<double>(0.0));
}

TEST_CASE("centered sphere on the axis at 2R") {
  // Degree-2 image of the applied potential: B_z = b_z (z - R^5 / z^4) on the axis.
  const double R = kSphere.radius();
  const auto sol = solve_coefficients(kField, Vec3::Zero(), kSphere);
  const Vec3 b = total_field(sol, Vec3(0, 0, 2 * R));
  CHECK(b.z() == doctest::Approx(kField.bz() * R * (2.0 - 1.0 / 16.0)).epsilon(1e-12));
  CHECK(std::abs(b.x()) + std::abs(b.y()) < 1e-12 * std::abs(b.z()));
}

TEST_CASE("levitation equilibrium reproduces the gravity sag") {
  const auto f = trap_frequencies(kField, kSphere.density());
  const double sag = gravity_sag(f.fz);
  const Vec3 force = force_analytic(kField, Vec3(0, 0, sag), kSphere);
  CHECK(force.z() == doctest::Approx(kSphere.mass() * 9.81).epsilon(1e-12));
  CHECK(gravity_sag(240) == doctest::Approx(-4.3e-6).epsilon(0.01));
  CHECK(gravity_sag(20) == doctest::Approx(-0.62e-3).epsilon(0.01));
}

TEST_CASE("stress-tensor force is linear for small offsets") {
  const double R = kSphere.radius();
  std::vector<double> slopes;
  for (double s : {0.01, 0.02, 0.03, 0.05}) {
    const auto sol = solve_coefficients(kField, Vec3(0, 0, s * R), kSphere);
    slopes.push_back(force_stress_tensor(sol, kSphere, 4096).force.z() / (s * R));
  }
  for (double s : slopes) CHECK(s == doctest::Approx(slopes[0]).epsilon(1e-3));
  const auto coarse = force_stress_tensor(solve_coefficients(kField, Vec3(0.1 * R, 0, 0.2 * R), kSphere), kSphere, 64 * 64);
  const Vec3 fa = force_analytic(kField, Vec3(0.1 * R, 0, 0.2 * R), kSphere);
  CHECK((coarse.force - fa).norm() < 1e-3 * fa.norm());
}

}
