#include <cmath>

#include "doctest.h"
#include "maglev/error.hpp"
#include "maglev/noise_budget.hpp"

using namespace maglev;
using constants::hbar;
using constants::k_B;
using constants::pi;

namespace {

const auto kMode = OscillatorMode::from_q(5.6e-9, 212, 2.6e7, 0.015);

SquidCircuit circuit_with_product(double product_hbar, double L_tilde = 15e-12) {
  const double s_phi = product_hbar * hbar * L_tilde;
  const double s_jj = product_hbar * hbar / L_tilde;
  return SquidCircuit::make(15e-12, 0.5e-6, 0.0, 0.0, 0.8, s_phi, s_jj);
}

}  // namespace

TEST_SUITE("noise_budget") {

TEST_CASE("mode construction") {
  CHECK(kMode.q() == doctest::Approx(2.6e7));
  CHECK(kMode.f0() == doctest::Approx(212));
  const auto g = OscillatorMode::from_gamma(1.0, 10, 0.5, 1.0);
  CHECK(g.q() == doctest::Approx(2 * pi * 10 / 0.5));
  CHECK_THROWS_AS(OscillatorMode::from_q(-1, 10, 10, 1), Error);
}

TEST_CASE("thermal force and sensitivity") {
  const double fth = std::sqrt(4 * k_B * 0.015 * 5.6e-9 * kMode.gamma);
  CHECK(thermal_force_noise(kMode) == doctest::Approx(fth));
  CHECK(thermal_acceleration_noise(kMode) == doctest::Approx(fth / 5.6e-9));
  const double chi0 = std::abs(susceptibility(kMode, kMode.omega0));
  CHECK(chi0 == doctest::Approx(1.0 / (5.6e-9 * kMode.omega0 * kMode.gamma)));
  const double s = force_sensitivity(kMode, 1e-18, kMode.omega0);
  CHECK(s * s == doctest::Approx(fth * fth + 1e-18 / (chi0 * chi0)));
  CHECK(noise_equivalent_temperature(kMode, 1e-18) == doctest::Approx(s * s / (4 * k_B * 5.6e-9 * kMode.gamma)));
  CHECK(noise_equivalent_temperature(kMode, 0.0) == doctest::Approx(0.015));
}

TEST_CASE("thermal displacement variance obeys equipartition") {
  const auto m = OscillatorMode::from_q(2e-3, 1.0, 5.0, 3.0);
  const double s_ff = 4 * k_B * m.T0 * m.mass * m.gamma;
  const double f_max = 2000.0;
  const int n = 2'000'000;
  const double df = f_max / n;
  double var = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    var += w * std::norm(susceptibility(m, 2 * pi * i * df)) * s_ff * df;
  }
  CHECK(var == doctest::Approx(k_B * m.T0 / (m.mass * m.omega0 * m.omega0)).epsilon(1e-4));
}

TEST_CASE("bin-averaged susceptibility") {
  const auto m = OscillatorMode::from_q(1.0, 10.0, 50.0, 1.0);
  CHECK(mean_susceptibility_sq(m, 0.0) == doctest::Approx(std::norm(susceptibility(m, m.omega0))));
  const double bin = 0.3;
  const int n = 200000;
  double avg = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = m.f0() - bin / 2 + (i + 0.5) * bin / n;
    avg += std::norm(susceptibility(m, 2 * pi * f)) / n;
  }
  CHECK(mean_susceptibility_sq(m, bin) == doctest::Approx(avg).epsilon(1e-7));
  // Averaging lowers the peak, which raises the drift-limited sensitivity.
  CHECK(drift_averaged_sensitivity(kMode, 1e-18, 0.005) > force_sensitivity(kMode, 1e-18, kMode.omega0));
  CHECK(drift_noise_equivalent_temperature(kMode, 1e-18, 0.005) > noise_equivalent_temperature(kMode, 1e-18));
}

TEST_CASE("noise curve interpolation") {
  const auto c = NoiseCurve::table({1, 100}, {1e-2, 1e-6});
  CHECK(c(10) == doctest::Approx(1e-4));
  CHECK(c(0.1) == doctest::Approx(1e-2));
  CHECK(c(1e4) == doctest::Approx(1e-6));
  CHECK(NoiseCurve::constant(3.0)(123) == 3.0);
  CHECK(NoiseCurve().is_zero());
  const auto z = NoiseCurve::table({1, 3}, {0.0, 2.0});
  CHECK(z(2) == doctest::Approx(2.0 * std::log(2.0) / std::log(3.0)));
  CHECK_THROWS_AS(NoiseCurve::table({2, 1}, {1, 1}), Error);
}

TEST_CASE("vibration response is self-consistent") {
  const auto r = vibration_response(kMode, NoiseCurve::constant(1e-20));
  CHECK(r.peak_asd == doctest::Approx(1e-10 * kMode.q()));
  CHECK(r.rms == doctest::Approx(std::sqrt(r.energy / (kMode.mass * kMode.omega0 * kMode.omega0))));
  CHECK(r.T_eff == doctest::Approx(r.energy / k_B));
  // Energy from integrating the displacement PSD of a low-Q copy.
  const auto m = OscillatorMode::from_q(1.0, 5.0, 20.0, 0.0);
  const auto low = vibration_response(m, NoiseCurve::constant(1e-6));
  double var = 0.0;
  const double df = 1e-4;
  for (double f = df / 2; f < 500; f += df) var += vibration_displacement_psd(m, NoiseCurve::constant(1e-6), 2 * pi * f) * df;
  CHECK(low.rms * low.rms == doctest::Approx(var).epsilon(1e-3));
}

TEST_CASE("heating rates and effective temperature") {
  const auto m = OscillatorMode::from_q(1e-6, 100.0, 1e4, 0.01);
  const auto r = heating_rates(m, NoiseCurve::constant(1e-24), NoiseCurve::constant(1e-10));
  const double w = m.omega0;
  CHECK(r.Qdot_eps == doctest::Approx(pi / 2 * m.mass * std::pow(w, 4) * 1e-24 / (2 * pi)).epsilon(1e-9));
  CHECK(r.Gamma_delta == doctest::Approx(pi / 2 * w * w * 1e-10 / (2 * pi)).epsilon(1e-9));
  const double t = effective_temperature(m, r);
  CHECK(t == doctest::Approx((k_B * m.T0 * m.gamma + r.Qdot_eps) / (k_B * (m.gamma - r.Gamma_delta))));
  try {
    effective_temperature(m, heating_rates(m, NoiseCurve::constant(0.0), NoiseCurve::constant(1.0)));
    FAIL("expected UnstableHeating");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnstableHeating);
  }
}

TEST_CASE("standard quantum limit") {
  const auto m = OscillatorMode::from_q(5.6e-9, 212, 1e6, 0.015);
  const auto c = circuit_with_product(2.0);
  const double w = m.omega0 * 1.001;
  const double eta_opt = optimal_eta(m, c, w);
  const double minimum = sql_minimum(m, c, w);
  CHECK(sql_psd(m, c, eta_opt, w) == doctest::Approx(minimum).epsilon(1e-10));
  for (double s : {0.1, 0.5, 0.9, 1.1, 2.0, 10.0}) CHECK(sql_psd(m, c, s * eta_opt, w) >= minimum);
}

TEST_CASE("feedback phonon number") {
  const auto m = OscillatorMode::from_gamma(5.6e-9, 212, 1e-6, 0.015);
  const double eta = from_flux_quanta(5.5e7);
  const auto ql = circuit_with_product(1.0);
  const auto n = feedback_phonon_number(m, ql, eta);
  CHECK(n.backaction == doctest::Approx(0.0));
  CHECK(n.thermal == doctest::Approx(k_B * m.T0 * m.mass * m.gamma * 15e-12 / (hbar * eta * eta)));
  CHECK(n.total == doctest::Approx(n.thermal + n.backaction));
  CHECK(feedback_phonon_number(m, ql, 2 * eta).thermal == doctest::Approx(n.thermal / 4));
  CHECK(feedback_phonon_number(m, circuit_with_product(3.0), eta).backaction == doctest::Approx(1.0));
  CHECK(n.gain == doctest::Approx(cold_damping_gain(m, ql, eta)));
  CHECK(n.gain_dominates);
}

TEST_CASE("damping estimates") {
  const SphereParams s(50e-6, 10.9e3);
  const double vth = std::sqrt(8 * k_B * 300 / (pi * constants::helium_mass));
  CHECK(gas_damping(1e-4, 300, constants::helium_mass, s) == doctest::Approx(1.8 * 1e-4 / (10.9e3 * 50e-6 * vth)));
  const auto m = OscillatorMode::from_q(5.6e-9, 212, 1e6, 0.015);
  CHECK(eddy_damping(1e-9, m, 1e-8) == doctest::Approx(1e-18 / (2 * pi * 5.6e-9 * 212 * 1e-8)));
}

TEST_CASE("RL filter") {
  const RlFilter f{0.036};
  const double w = 2 * pi * 200;
  CHECK(f.amplitude(200) == doctest::Approx(0.036 / std::sqrt(0.036 * 0.036 + w * w)));
  CHECK(f.amplitude_db(200) == doctest::Approx(20 * std::log10(f.amplitude(200))));
  CHECK(f.psd_db(200) == doctest::Approx(2 * f.amplitude_db(200)));
  CHECK(f.amplitude(0) == 1.0);
  CHECK(f.step_response(1 / 0.036) == doctest::Approx(1 - std::exp(-1.0)));
  CHECK(RlFilter::from_components(3.6, 100).kappa == doctest::Approx(0.036));
}

TEST_CASE("budget report lists every line") {
  BudgetInputs in;
  in.mode = kMode;
  in.S_nn = 1e-18;
  in.drift_bin_hz = 0.005;
  in.S_epseps = NoiseCurve::constant(1e-20);
  const auto lines = noise_budget(in);
  CHECK(lines.size() > 8);
  bool found = false;
  for (const auto& l : lines) {
    CHECK(!l.quantity.empty());
    CHECK(std::isfinite(l.value));
    if (l.value == doctest::Approx(thermal_force_noise(kMode))) found = true;
  }
  CHECK(found);
}

}

TEST_SUITE("noise_budget") {

TEST_CASE("susceptibility is conjugate-symmetric") {
  for (double w : {1.0, 900.0, 1332.0, 5000.0}) {
    const auto a = susceptibility(kMode, w), b = susceptibility(kMode, -w);
    CHECK(b.real() == doctest::Approx(a.real()));
    CHECK(b.imag() == doctest::Approx(-a.imag()));
  }
}

TEST_CASE("wide drift bins follow the area law") {
  const auto m = OscillatorMode::from_q(1.0, 10.0, 1e3, 1.0);
  const double bin = 10 * m.gamma / (2 * pi);
  const double ratio = std::norm(susceptibility(m, m.omega0)) / mean_susceptibility_sq(m, bin);
  CHECK(ratio == doctest::Approx(4 * bin / m.gamma).epsilon(0.2));
  CHECK(drift_noise_equivalent_temperature(kMode, 1e-18, 0.005) >= 2.5);
}

TEST_CASE("ground-state noise requirements keep the mode cold") {
  const auto m = OscillatorMode::from_gamma(5.6e-9, 212, 1e-6, 0.015);
  const auto r = heating_rates(m, NoiseCurve::constant(1e-38), NoiseCurve::constant(1e-14));
  CHECK(effective_temperature(m, r) < 0.020);
}

TEST_CASE("closed-form optimal coupling matches a scan") {
  const auto m = OscillatorMode::from_q(5.6e-9, 212, 1e6, 0.015);
  const auto c = circuit_with_product(1.5);
  const double w = m.omega0 * 0.999;
  const double eta_opt = optimal_eta(m, c, w);
  double best = INFINITY, best_eta = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double eta = eta_opt * std::pow(10.0, -1.0 + 2.0 * i / 200000);
    const double s = sql_psd(m, c, eta, w);
    if (s < best) best = s, best_eta = eta;
  }
  CHECK(best_eta == doctest::Approx(eta_opt).epsilon(1e-3));
}

TEST_CASE("damping mechanisms stay negligible") {
  const SphereParams s(50e-6, 10.9e3);
  CHECK(gas_damping(1e-4, 300, constants::helium_mass, s) == doctest::Approx(3e-7).epsilon(0.2));
  // Conducting loops around 2 mm windows in a shield wall 25 mm from the trap, L_o = 10 nH.
  const auto qf = QuadrupoleField::from_magnitudes(57, 90, 147);
  const auto f = trap_frequencies(qf, s.density());
  const double freqs[] = {f.fx, f.fy, f.fz};
  const double d = 25e-3, h = 1e-3;
  const auto side = LoopGeometry::polyline({Vec3(d, -h, -h), Vec3(d, h, -h), Vec3(d, h, h), Vec3(d, -h, h)});
  for (const auto& window : {square_loop(Vec3(0, 0, d), 2 * h), side}) {
    for (int a = 0; a < 3; ++a) {
      const double dphi = coupling_nu_numeric(qf, s, window, static_cast<Axis>(a));
      const auto mode = OscillatorMode::from_q(s.mass(), freqs[a], 1e6, 0.015);
      CHECK(eddy_damping(dphi, mode, 10e-9) < 1e-9);
    }
  }
}

TEST_CASE("filter reaches 1 - 1/e after one time constant") {
  const RlFilter f{0.036};
  CHECK(f.time_constant() == doctest::Approx(27.8).epsilon(1e-3));
  CHECK(f.step_response(f.time_constant()) == doctest::Approx(1 - std::exp(-1.0)));
  CHECK(f.amplitude(200) == doctest::Approx(2.9e-5).epsilon(0.02));
}

}
