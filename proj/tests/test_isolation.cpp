#include <cmath>
#include <random>

#include "doctest.h"
#include "maglev/error.hpp"
#include "maglev/isolation.hpp"

using namespace maglev;

namespace {

Stage stage(double mass, int wires, double length = 0.1, double diameter = 38e-6) {
  Stage s;
  s.mass = mass;
  s.wire_count = wires;
  s.wire_length = length;
  s.wire_diameter = diameter;
  return s;
}

IsolationStack random_stack(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 5), wires(1, 4);
  std::uniform_real_distribution<double> mass(0.05, 2.0), length(0.02, 0.3), diameter(20e-6, 200e-6);
  IsolationStack st;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) st.stages.push_back(stage(mass(rng), wires(rng), length(rng), diameter(rng)));
  return st;
}

}  // namespace

TEST_SUITE("isolation") {

TEST_CASE("stage spring constant and frequency") {
  const auto s = stage(0.3, 3);
  const double k = 3 * 193e9 * 38e-6 * 38e-6 * constants::pi / (4 * 0.1);
  CHECK(stage_spring_constant(s) == doctest::Approx(k));
  CHECK(stage_frequency(s) == doctest::Approx(std::sqrt(k / 0.3) / (2 * constants::pi)));
  CHECK(pendulum_frequency(s) == doctest::Approx(std::sqrt(9.81 / 0.1) / (2 * constants::pi)));
}

TEST_CASE("mode product equals the stage product on random stacks") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto st = random_stack(rng);
    const auto modes = normal_modes(st);
    double pn = 1.0, pv = 1.0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      pn *= modes[i] * modes[i];
      pv *= std::pow(stage_frequency(st.stages[i]), 2);
    }
    CHECK(pn == doctest::Approx(pv).epsilon(1e-8));
    CHECK(std::is_sorted(modes.begin(), modes.end()));
    CHECK(transfer_function(st, 0.0) == 1.0);
  }
}

TEST_CASE("two-stage chain matches the characteristic polynomial") {
  IsolationStack st{{stage(0.5, 2), stage(0.2, 1)}};
  const double k1 = stage_spring_constant(st.stages[0]), k2 = stage_spring_constant(st.stages[1]);
  const double m1 = 0.5, m2 = 0.2;
  // w^4 - (k1/m1 + k2/m1 + k2/m2) w^2 + k1 k2/(m1 m2) = 0
  const double b = k1 / m1 + k2 / m1 + k2 / m2, c = k1 * k2 / (m1 * m2);
  const double disc = std::sqrt(b * b - 4 * c);
  const double w_lo = std::sqrt((b - disc) / 2), w_hi = std::sqrt((b + disc) / 2);
  const auto modes = normal_modes(st);
  CHECK(modes[0] == doctest::Approx(w_lo / (2 * constants::pi)).epsilon(1e-10));
  CHECK(modes[1] == doctest::Approx(w_hi / (2 * constants::pi)).epsilon(1e-10));
  // Direct solution of the driven chain at 30 Hz.
  const double w = 2 * constants::pi * 30;
  const double a11 = k1 + k2 - m1 * w * w, a12 = -k2, a22 = k2 - m2 * w * w;
  const double x2 = k1 * (-a12) / (a11 * a22 - a12 * a12);
  CHECK(transfer_function(st, 30) == doctest::Approx(std::abs(x2)).epsilon(1e-10));
}

TEST_CASE("high frequencies approach the asymptote") {
  IsolationStack st{{stage(0.3, 3), stage(0.3, 3), stage(0.29, 1)}};
  const double t = transfer_function(st, 2000);
  CHECK(t == doctest::Approx(transfer_asymptote(st, 2000)).epsilon(2e-3));
  CHECK(transfer_function(st, 400) < transfer_function(st, 200));
  const auto modes = normal_modes(st);
  try {
    transfer_function(st, modes[1]);
    FAIL("expected OnResonance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OnResonance);
  }
}

TEST_CASE("wire loads") {
  CHECK(yield_ratio(3.0, 3, 2.0) == doctest::Approx(0.5));
  auto top = stage(0.3, 3);
  top.yield_load = 0.5;
  auto bottom = stage(0.29, 1);
  bottom.yield_load = 0.5;
  IsolationStack st{{top, bottom}};
  const auto y = yield_check(st, 0.05);
  CHECK(y[0].supported_mass == doctest::Approx(0.64));
  CHECK(y[1].supported_mass == doctest::Approx(0.34));
  CHECK(y[0].load_ratio == doctest::Approx(0.64 / 3 / 0.5));
  CHECK(y[1].warning);
  CHECK_FALSE(y[0].warning);
  try {
    yield_check(st, 0.3);
    FAIL("expected WireOverload");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WireOverload);
  }
}

TEST_CASE("invalid stages") {
  try {
    IsolationStack{{stage(0.0, 1)}}.validate();
    FAIL("expected SingularMass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularMass);
  }
  CHECK_THROWS_AS(IsolationStack{{stage(1.0, 0)}}.validate(), Error);
  CHECK_THROWS_AS(IsolationStack{}.validate(), Error);
}

}

TEST_SUITE("isolation") {

TEST_CASE("single stage reduces to the textbook response") {
  IsolationStack st{{stage(0.29, 1, 0.055)}};
  const double fv = stage_frequency(st.stages[0]);
  CHECK(fv == doctest::Approx(18.7).epsilon(0.01));
  CHECK(normal_modes(st)[0] == doctest::Approx(fv).epsilon(1e-10));
  for (double f : {3.0, 25.0, 200.0}) CHECK(transfer_function(st, f) == doctest::Approx(std::abs(fv * fv / (fv * fv - f * f))));
  auto doubled = st.stages[0];
  doubled.wire_count = 2;
  CHECK(stage_spring_constant(doubled) == doctest::Approx(2 * stage_spring_constant(st.stages[0])));
}

TEST_CASE("inferred assembly reproduces the quoted attenuation") {
  IsolationStack st{{stage(0.3, 3, 0.18), stage(0.3, 3, 0.18), stage(0.29, 1, 0.18)}};
  const auto modes = normal_modes(st);
  CHECK(modes.back() == doctest::Approx(30).epsilon(0.1));
  CHECK(transfer_function(st, 100) == doctest::Approx(1e-5).epsilon(0.25));
  CHECK(transfer_function(st, 200) == doctest::Approx(1.5e-7).epsilon(0.25));
  CHECK(transfer_function(st, 2 * modes.back()) == doctest::Approx(transfer_asymptote(st, 2 * modes.back())).epsilon(0.25));
}

TEST_CASE("bottom plate on one wire is flagged") {
  auto s = stage(0.29, 1);
  s.yield_load = 0.37;
  const auto y = yield_check(IsolationStack{{s}});
  CHECK(y[0].load_ratio == doctest::Approx(0.78).epsilon(0.01));
  CHECK(y[0].warning);
  CHECK(yield_ratio(0.0, 1, 0.37) == 0.0);
}

}
