#include <cmath>
#include <random>

#include "doctest.h"
#include "maglev/constants.hpp"
#include "maglev/error.hpp"
#include "maglev/fieldmodel.hpp"

using namespace maglev;

namespace {

// On-axis field of one circular loop of radius a at height zc.
double loop_bz_on_axis(double current, double a, double zc, double z) {
  const double r2 = a * a + (z - zc) * (z - zc);
  return constants::mu0 * current * a * a / (2.0 * r2 * std::sqrt(r2));
}

CoilPair single_loop(double a, double separation, double current) {
  CoilPair c;
  c.semi_x = c.semi_y = a;
  c.separation = separation;
  c.turns = 1;
  c.current_upper = current;
  c.current_lower = 0.0;
  return c;
}

// 3x3 Jacobian dB_i/dx_j by central differences.
Eigen::Matrix3d jacobian(const CoilPair& coils, const Vec3& p, double h) {
  BiotSavartOptions tight;
  tight.rel_tolerance = 1e-14;
  Eigen::Matrix3d j;
  for (int k = 0; k < 3; ++k) {
    Vec3 d = Vec3::Zero();
    d[k] = h;
    j.col(k) = (biot_savart_field(coils, p + d, tight) - biot_savart_field(coils, p - d, tight)) / (2.0 * h);
  }
  return j;
}

}  // namespace

TEST_SUITE("fieldmodel") {

TEST_CASE("quadrupole constructors keep the trace at zero") {
  const auto q = QuadrupoleField::from_magnitudes(57, 90, 147);
  CHECK(q.bx() == 57);
  CHECK(q.by() == 90);
  CHECK(q.bz() == -147);
  CHECK(q.trace() == 0.0);
  CHECK(q.ordered());

  CHECK_THROWS_AS(QuadrupoleField::from_magnitudes(57, 90, 150), Error);
  CHECK_THROWS_AS(QuadrupoleField::from_triple(1, 1, 1), Error);
  const auto t = QuadrupoleField::from_triple(-20, 50, -30);
  CHECK(t.trace() == 0.0);
  CHECK_FALSE(t.ordered());
  CHECK(QuadrupoleField::from_xy(1, 2).scaled(3).bz() == doctest::Approx(-9));
}

TEST_CASE("quadrupole_field is linear about the displaced center") {
  const auto q = QuadrupoleField::from_xy(10, 20);
  const Vec3 b = quadrupole_field(q, Vec3(1, 2, 3), Vec3(0.5, -1, 0));
  CHECK(b.x() == doctest::Approx(15));
  CHECK(b.y() == doctest::Approx(20));
  CHECK(b.z() == doctest::Approx(-90));
}

TEST_CASE("single loop matches the on-axis closed form") {
  const double a = 0.01, d = 0.02, current = 2.5;
  const auto c = single_loop(a, d, current);
  for (double z : {-0.03, -0.005, 0.0, 0.004, 0.025}) {
    const Vec3 b = biot_savart_field(c, Vec3(0, 0, z));
    CHECK(b.z() == doctest::Approx(loop_bz_on_axis(current, a, d / 2, z)).epsilon(1e-10));
    CHECK(std::abs(b.x()) < 1e-12 * std::abs(b.z()));
    CHECK(std::abs(b.y()) < 1e-12 * std::abs(b.z()));
  }
}

TEST_CASE("circular anti-Helmholtz gradients match the closed form") {
  const double a = 0.004, d = 0.005, current = 3.0;
  const int turns = 4;
  const auto pair = CoilPair::anti_helmholtz(a, a, d, turns, current);
  const double s = d / 2;
  const double bz = 3.0 * constants::mu0 * turns * current * a * a * s / std::pow(a * a + s * s, 2.5);
  const auto g = extract_gradients(pair, 1e-6);
  CHECK(g.field.bz() == doctest::Approx(bz).epsilon(1e-7));
  CHECK(g.field.bx() == doctest::Approx(-bz / 2).epsilon(1e-7));
  CHECK(g.field.by() == doctest::Approx(-bz / 2).epsilon(1e-7));
  CHECK(g.trace_residual < 1e-6);
  CHECK(g.field.trace() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("elliptical coils order the gradients by semi-axis") {
  const auto pair = CoilPair::anti_helmholtz(0.003, 0.005, 0.004, 1, 1.0);
  const auto g = extract_gradients(pair);
  CHECK(std::abs(g.field.bx()) > 0.0);
  CHECK(std::abs(g.field.bx()) != doctest::Approx(std::abs(g.field.by())));
  CHECK(g.field.trace() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coil field is divergence and curl free off the filaments") {
  const auto pair = CoilPair::anti_helmholtz(0.003, 0.004, 0.004, 2, 1.0);
  for (const Vec3& p : {Vec3(1e-3, -5e-4, 3e-4), Vec3(-2e-3, 1e-3, -1.5e-3), Vec3(4e-4, 2.5e-3, 1e-3)}) {
    const auto j = jacobian(pair, p, 1e-7);
    const double scale = j.norm();
    CHECK(std::abs(j.trace()) < 1e-6 * scale);
    CHECK((j - j.transpose()).norm() < 1e-6 * scale);
  }
}

TEST_CASE("quadrupole fit improves toward the center") {
  const auto pair = CoilPair::anti_helmholtz(0.004, 0.004, 0.005, 1, 1.0);
  const double wide = quadrupole_fit_rms(pair, 5e-4, 125);
  const double narrow = quadrupole_fit_rms(pair, 5e-5, 125);
  CHECK(narrow < wide);
  CHECK(narrow < 1e-3);
  CHECK(cube_sample_points(1e-3, 125).size() == 124);
}

TEST_CASE("failure modes") {
  const auto pair = CoilPair::anti_helmholtz(0.004, 0.004, 0.005, 1, 1.0);
  try {
    biot_savart_field(pair, Vec3(0.004, 0, 0.0025));
    FAIL("expected PointOnFilament");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PointOnFilament);
  }
  auto helmholtz = pair;
  helmholtz.current_lower = helmholtz.current_upper;
  try {
    extract_gradients(helmholtz);
    FAIL("expected NotAntiHelmholtz");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotAntiHelmholtz);
  }
  auto bad = pair;
  bad.semi_x = -1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = pair;
  bad.offsets.resize(3);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("winding offsets move the turns") {
  auto pair = CoilPair::anti_helmholtz(0.004, 0.004, 0.005, 2, 1.0);
  const double base = extract_gradients(pair).field.bz();
  pair.offsets = {WindingOffset{}, WindingOffset{0.0, 0.001}};
  const double shifted = extract_gradients(pair).field.bz();
  CHECK(std::abs(shifted) < std::abs(base));
}

}

TEST_SUITE("fieldmodel") {

TEST_CASE("fourth-order divergence stays at roundoff near the center") {
  const auto pair = CoilPair::anti_helmholtz(0.004, 0.004, 0.005, 1, 1.0);
  const double bz = std::abs(extract_gradients(pair).field.bz());
  BiotSavartOptions tight;
  tight.rel_tolerance = 1e-15;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5e-4, 5e-4);
  const double h = 3e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 p(u(rng), u(rng), u(rng));
    double div = 0.0;
    for (int k = 0; k < 3; ++k) {
      Vec3 d = Vec3::Zero();
      d[k] = h;
      const double f = -biot_savart_field(pair, p + 2 * d, tight)[k] + 8 * biot_savart_field(pair, p + d, tight)[k] -
                       8 * biot_savart_field(pair, p - d, tight)[k] + biot_savart_field(pair, p - 2 * d, tight)[k];
      div += f / (12 * h);
    }
    CHECK(std::abs(div) < 1e-12 * bz);
  }
}

TEST_CASE("elliptical pair with the major axis along x orders the gradients") {
  const auto pair = CoilPair::anti_helmholtz(0.006, 0.004, 0.005, 1, 1.0);
  const auto g = extract_gradients(pair).field;
  CHECK(std::abs(g.bx()) < std::abs(g.by()));
  CHECK(std::abs(g.by()) < std::abs(g.bz()));
  CHECK(g.ordered());
}

TEST_CASE("millimeter pair stays quadrupolar over 100 um and degrades with size") {
  const auto pair = CoilPair::anti_helmholtz(0.002, 0.002, 0.0025, 1, 1.0);
  double prev = 0.0;
  for (double hw : {25e-6, 50e-6, 100e-6, 200e-6}) {
    const double dev = quadrupole_fit_rms(pair, hw, 125);
    if (hw == 100e-6) CHECK(dev < 1e-2);
    CHECK(dev > prev);
    prev = dev;
  }
}

}
