#include <cmath>
#include <numeric>

#include "doctest.h"
#include "maglev/dynamics_sim.hpp"
#include "maglev/error.hpp"
#include "maglev/spectral_analysis.hpp"

using namespace maglev;
using constants::k_B;
using constants::pi;

namespace {

SimConfig thermal_config(double q, std::uint64_t seed) {
  SimConfig c;
  SimMode m;
  m.mode = OscillatorMode::from_q(1e-3, 10.0, q, 1.0);
  c.modes = {m};
  c.dt = 1.0 / 500.0;
  c.duration = 20.0;
  c.seed = seed;
  return c;
}

// Mean of x^2 after discarding the first `burn` seconds.
double mean_square(const TimeSeries& ts, double burn) {
  const std::size_t start = static_cast<std::size_t>(burn / ts.sample_interval);
  double s = 0.0;
  for (std::size_t i = start; i < ts.size(); ++i) s += ts.x[i] * ts.x[i];
  return s / static_cast<double>(ts.size() - start);
}

}  // namespace

TEST_SUITE("dynamics_sim") {

TEST_CASE("configuration limits") {
  auto c = thermal_config(20, 1);
  CHECK_NOTHROW(c.validate());
  c.dt = 1.0 / 400.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = thermal_config(20, 1);
  c.duration = 5.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.spectral = false;
  CHECK_NOTHROW(c.validate());
  c.modes.push_back(c.modes[0]);
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("equipartition over independent replicas") {
  std::vector<SimConfig> configs;
  for (std::uint64_t i = 0; i < 32; ++i) configs.push_back(thermal_config(20, derive_seed(99, i)));
  const auto results = simulate_sweep(configs);
  std::vector<double> ms;
  for (const auto& r : results) ms.push_back(mean_square(r.series[0], 3.0));
  const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / ms.size();
  double var = 0.0;
  for (double v : ms) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / (ms.size() - 1) / ms.size());
  const auto& mode = configs[0].modes[0].mode;
  const double expected = k_B * mode.T0 / (mode.mass * mode.omega0 * mode.omega0);
  CHECK(std::abs(mean - expected) < 3 * sigma);
  CHECK(sigma < 0.1 * expected);
}

TEST_CASE("free decay follows the damping rate") {
  auto c = thermal_config(200, 5);
  c.modes[0].noise.thermal = false;
  c.modes[0].x0 = 1e-6;
  const auto r = simulate(c);
  const auto& ts = r.series[0];
  const double gamma = c.modes[0].mode.gamma;
  const double w = c.modes[0].mode.omega0;
  const double wd = std::sqrt(w * w - gamma * gamma / 4);
  for (std::size_t i : {std::size_t(0), std::size_t(1234), ts.size() - 1}) {
    const double t = i * ts.sample_interval;
    const double exact = 1e-6 * std::exp(-gamma * t / 2) * (std::cos(wd * t) + gamma / (2 * wd) * std::sin(wd * t));
    CHECK(ts.x[i] == doctest::Approx(exact).epsilon(1e-9).scale(1e-6));
  }
  const auto fit = ringdown_q(ts.x, 1.0 / ts.sample_interval, 10.0);
  CHECK(fit.gamma == doctest::Approx(gamma).epsilon(0.05));
  CHECK_FALSE(fit.jump);
}

TEST_CASE("semi-implicit Euler converges to the exact propagator") {
  auto c = thermal_config(200, 5);
  c.modes[0].noise.thermal = false;
  c.modes[0].x0 = 1e-6;
  c.duration = 2.0;
  c.spectral = false;
  const auto exact = simulate(c).series[0];
  double prev_err = 0.0;
  for (double dt : {1.0 / 1000, 1.0 / 4000}) {
    c.dt = dt;
    c.integrator = Integrator::SemiImplicitEuler;
    c.record_every = static_cast<int>(std::lround((1.0 / 500) / dt));
    const auto approx = simulate(c).series[0];
    double err = 0.0;
    for (std::size_t i = 0; i < std::min(exact.size(), approx.size()); ++i)
      err = std::max(err, std::abs(approx.x[i] - exact.x[i]));
    if (prev_err > 0.0) CHECK(err < 0.5 * prev_err);
    CHECK(err < 0.1e-6);
    prev_err = err;
  }
}

TEST_CASE("cold damping lowers the mode temperature") {
  std::vector<SimConfig> plain, damped;
  for (std::uint64_t i = 0; i < 8; ++i) {
    auto c = thermal_config(20, derive_seed(7, i));
    c.duration = 40.0;
    plain.push_back(c);
    c.feedback.enabled = true;
    c.feedback.gain = 3.0 * c.modes[0].mode.gamma;
    damped.push_back(c);
  }
  double a = 0.0, b = 0.0;
  for (const auto& r : simulate_sweep(plain)) a += mean_square(r.series[0], 3.0);
  for (const auto& r : simulate_sweep(damped)) b += mean_square(r.series[0], 3.0);
  CHECK(b / a == doctest::Approx(0.25).epsilon(0.2));
}

TEST_CASE("measurement noise enters only the measured record") {
  auto c = thermal_config(20, 3);
  auto d = c;
  d.modes[0].noise.S_nn = 1e-20;
  const auto r1 = simulate(c).series[0];
  const auto r2 = simulate(d).series[0];
  CHECK(r1.x == r2.x);
  CHECK(r1.y == r1.x);
  double var = 0.0;
  for (std::size_t i = 0; i < r2.size(); ++i) var += std::pow(r2.y[i] - r2.x[i], 2);
  var /= r2.size();
  CHECK(var == doctest::Approx(1e-20 / (2 * c.dt)).epsilon(0.05));
}

TEST_CASE("replay is bit-identical and sweeps ignore the worker count") {
  const auto c = thermal_config(20, 42);
  const auto a = simulate(c);
  const auto b = simulate(c);
  CHECK(a.series[0].x == b.series[0].x);
  CHECK(a.series[0].y == b.series[0].y);
  CHECK(a.config_digest == config_digest(c));
  auto other = c;
  other.seed = 43;
  CHECK(simulate(other).series[0].x != a.series[0].x);
  CHECK(config_digest(other) != config_digest(c));

  std::vector<SimConfig> configs;
  for (std::uint64_t i = 0; i < 6; ++i) configs.push_back(thermal_config(20, derive_seed(1, i)));
  const auto one = simulate_sweep(configs, 1);
  const auto four = simulate_sweep(configs, 4);
  for (std::size_t i = 0; i < configs.size(); ++i) CHECK(one[i].series[0].x == four[i].series[0].x);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
}

TEST_CASE("tabulated noise curves are synthesized with the right level") {
  auto c = thermal_config(20, 11);
  c.modes[0].noise.thermal = false;
  c.modes[0].noise.S_nn = 0.0;
  c.modes[0].noise.S_epseps = NoiseCurve::table({1.0, 100.0}, {1e-16, 1e-16});
  c.duration = 200.0;
  const auto ts = simulate(c).series[0];
  const auto& m = c.modes[0].mode;
  const double expected = m.omega0 * m.q() * 1e-16 / 4.0;  // omega0^2 S / (4 gamma)
  CHECK(mean_square(ts, 5.0) == doctest::Approx(expected).epsilon(0.25));
}

TEST_CASE("heating validation reproduces the analytic rates") {
  HeatingValidationConfig hv;
  hv.runs = 200;
  const auto rows = heating_validation(hv);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    if (r.source == "none") {
      CHECK(std::abs(r.measured) < 1e-10);
    } else {
      CHECK(r.relative_error < 0.2);
    }
  }
}

}

TEST_SUITE("dynamics_sim") {

TEST_CASE("thermal spectrum carries the equipartition area") {
  auto c = thermal_config(200, 21);
  c.duration = 600.0;
  const auto ts = simulate(c).series[0];
  const auto p = welch_psd(ts.x, 1.0 / ts.sample_interval, 1 << 15);
  const auto fit = lorentzian_fit(p, 8.0, 12.0);
  const auto& m = c.modes[0].mode;
  CHECK(fit.area == doctest::Approx(k_B * m.T0 / (m.mass * m.omega0 * m.omega0)).epsilon(0.15));
  CHECK(fit.gamma == doctest::Approx(m.gamma).epsilon(0.2));
  CHECK(fit.f0 == doctest::Approx(10.0).epsilon(1e-3));
}

}
