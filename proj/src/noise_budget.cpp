#include "maglev/noise_budget.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "maglev/constants.hpp"
#include "maglev/error.hpp"

namespace maglev {

using constants::hbar;
using constants::k_B;
using constants::pi;

OscillatorMode OscillatorMode::from_q(double mass, double f0, double q, double T0) {
  require(q > 0.0, "quality factor must be positive");
  const double w = 2.0 * pi * f0;
  OscillatorMode m{mass, w, w / q, T0};
  m.validate();
  return m;
}

OscillatorMode OscillatorMode::from_gamma(double mass, double f0, double gamma, double T0) {
  OscillatorMode m{mass, 2.0 * pi * f0, gamma, T0};
  m.validate();
  return m;
}

void OscillatorMode::validate() const {
  require(mass > 0.0 && std::isfinite(mass), "mode mass must be positive");
  require(omega0 > 0.0 && std::isfinite(omega0), "mode frequency must be positive");
  require(gamma >= 0.0 && std::isfinite(gamma), "damping rate must be non-negative");
  require(T0 >= 0.0 && std::isfinite(T0), "bath temperature must be non-negative");
}

NoiseCurve NoiseCurve::constant(double psd) { return table({1.0}, {psd}); }

NoiseCurve NoiseCurve::table(std::vector<double> freq_hz, std::vector<double> psd) {
  require(!freq_hz.empty() && freq_hz.size() == psd.size(), "noise table needs matching, non-empty columns");
  for (std::size_t i = 0; i < freq_hz.size(); ++i) {
    require(freq_hz[i] > 0.0 && std::isfinite(freq_hz[i]), "noise table frequencies must be positive");
    require(psd[i] >= 0.0 && std::isfinite(psd[i]), "noise densities must be non-negative");
    if (i > 0) require(freq_hz[i] > freq_hz[i - 1], "noise table frequencies must increase");
  }
  NoiseCurve c;
  c.f_ = std::move(freq_hz);
  c.s_ = std::move(psd);
  return c;
}

double NoiseCurve::operator()(double f_hz) const {
  if (s_.empty()) return 0.0;
  if (s_.size() == 1 || f_hz <= f_.front()) return s_.front();
  if (f_hz >= f_.back()) return s_.back();
  const auto it = std::upper_bound(f_.begin(), f_.end(), f_hz);
  const std::size_t j = static_cast<std::size_t>(it - f_.begin());
  const std::size_t i = j - 1;
  const double t = std::log(f_hz / f_[i]) / std::log(f_[j] / f_[i]);
  if (s_[i] == 0.0 || s_[j] == 0.0) return s_[i] + t * (s_[j] - s_[i]);
  return s_[i] * std::pow(s_[j] / s_[i], t);
}

bool NoiseCurve::is_zero() const {
  return std::all_of(s_.begin(), s_.end(), [](double v) { return v == 0.0; });
}

std::complex<double> susceptibility(const OscillatorMode& mode, double omega) {
  mode.validate();
  const std::complex<double> den(mode.omega0 * mode.omega0 - omega * omega, -mode.gamma * omega);
  return 1.0 / (mode.mass * den);
}

double thermal_force_noise(const OscillatorMode& mode) {
  mode.validate();
  return std::sqrt(4.0 * k_B * mode.T0 * mode.mass * mode.gamma);
}

double thermal_acceleration_noise(const OscillatorMode& mode) { return thermal_force_noise(mode) / mode.mass; }

double force_sensitivity(const OscillatorMode& mode, double S_nn, double omega) {
  require(S_nn >= 0.0, "S_nn must be non-negative");
  const double th = thermal_force_noise(mode);
  return std::sqrt(th * th + S_nn / std::norm(susceptibility(mode, omega)));
}

double noise_equivalent_temperature(const OscillatorMode& mode, double S_nn) {
  require(mode.gamma > 0.0, "noise-equivalent temperature needs gamma > 0");
  require(S_nn >= 0.0, "S_nn must be non-negative");
  return mode.T0 + S_nn / std::norm(susceptibility(mode, mode.omega0)) / (4.0 * k_B * mode.mass * mode.gamma);
}

double mean_susceptibility_sq(const OscillatorMode& mode, double bin_width_hz) {
  require(bin_width_hz >= 0.0, "bin width must be non-negative");
  if (bin_width_hz == 0.0) return std::norm(susceptibility(mode, mode.omega0));
  require(mode.gamma > 0.0, "bin-averaged susceptibility needs gamma > 0");
  // f = f0 + w tan(theta) with w the Lorentzian half width in Hz flattens the peak.
  const double f0 = mode.f0();
  const double w = mode.gamma / (4.0 * pi);
  const double half = 0.5 * bin_width_hz;
  require(half < f0, "bin width must be smaller than 2 f0");
  // omega0^2 - omega^2 is formed from the detuning to avoid cancellation.
  auto integrand = [&](double theta) {
    const double t = std::tan(theta);
    const double dw = 2.0 * pi * w * t;
    const double omega = mode.omega0 + dw;
    const double d = dw * (2.0 * mode.omega0 + dw);
    const double den = mode.mass * mode.mass * (d * d + mode.gamma * mode.gamma * omega * omega);
    return w * (1.0 + t * t) / den;
  };
  const double lim = std::atan(half / w);
  using boost::math::quadrature::gauss_kronrod;
  const double integral = gauss_kronrod<double, 61>::integrate(integrand, -lim, lim, 15, 1e-10);
  return integral / bin_width_hz;
}

double drift_averaged_sensitivity(const OscillatorMode& mode, double S_nn, double bin_width_hz) {
  require(S_nn >= 0.0, "S_nn must be non-negative");
  const double th = thermal_force_noise(mode);
  return std::sqrt(th * th + S_nn / mean_susceptibility_sq(mode, bin_width_hz));
}

double drift_noise_equivalent_temperature(const OscillatorMode& mode, double S_nn, double bin_width_hz) {
  require(mode.gamma > 0.0, "noise-equivalent temperature needs gamma > 0");
  return mode.T0 + S_nn / mean_susceptibility_sq(mode, bin_width_hz) / (4.0 * k_B * mode.mass * mode.gamma);
}

double vibration_displacement_psd(const OscillatorMode& mode, const NoiseCurve& S_epseps, double omega) {
  const double w2 = mode.omega0 * mode.omega0;
  return std::norm(susceptibility(mode, omega)) * mode.mass * mode.mass * w2 * w2 * S_epseps(omega / (2.0 * pi));
}

VibrationResponse vibration_response(const OscillatorMode& mode, const NoiseCurve& S_epseps) {
  require(mode.gamma > 0.0, "vibration equilibrium needs gamma > 0");
  const auto rates = heating_rates(mode, S_epseps, NoiseCurve{});
  VibrationResponse out;
  out.peak_asd = std::sqrt(vibration_displacement_psd(mode, S_epseps, mode.omega0));
  out.energy = rates.Qdot_eps / mode.gamma;
  out.rms = std::sqrt(out.energy / (mode.mass * mode.omega0 * mode.omega0));
  out.T_eff = out.energy / k_B;
  return out;
}

HeatingRates heating_rates(const OscillatorMode& mode, const NoiseCurve& S_epseps, const NoiseCurve& S_deltadelta) {
  mode.validate();
  const double w = mode.omega0;
  const double f0 = mode.f0();
  return {0.25 * mode.mass * w * w * w * w * S_epseps(f0), 0.25 * w * w * S_deltadelta(2.0 * f0)};
}

double effective_temperature(const OscillatorMode& mode, const HeatingRates& rates) {
  mode.validate();
  if (rates.Gamma_delta >= mode.gamma) {
    std::ostringstream msg;
    msg << "parametric heating rate " << rates.Gamma_delta << " 1/s is not below the damping " << mode.gamma
        << " 1/s";
    fail(ErrorCode::UnstableHeating, msg.str());
  }
  return (k_B * mode.T0 * mode.gamma + rates.Qdot_eps) / (k_B * (mode.gamma - rates.Gamma_delta));
}

double sql_psd(const OscillatorMode& mode, const SquidCircuit& circuit, double eta, double omega) {
  circuit.validate();
  if (eta == 0.0) fail(ErrorCode::ZeroCoupling, "coupling strength is zero");
  const double chi2 = std::norm(susceptibility(mode, omega));
  const double th = thermal_force_noise(mode);
  return circuit.S_phiphi / (eta * eta) + chi2 * (th * th + eta * eta * circuit.S_JJ);
}

double optimal_eta(const OscillatorMode& mode, const SquidCircuit& circuit, double omega) {
  circuit.validate();
  require(circuit.S_JJ > 0.0, "optimal coupling needs S_JJ > 0");
  return std::sqrt(circuit.effective_inductance() / std::abs(susceptibility(mode, omega)));
}

double sql_minimum(const OscillatorMode& mode, const SquidCircuit& circuit, double omega) {
  circuit.validate();
  const double chi = std::abs(susceptibility(mode, omega));
  const double th = thermal_force_noise(mode);
  return 2.0 * chi * circuit.noise_product() + chi * chi * th * th;
}

double cold_damping_gain(const OscillatorMode& mode, const SquidCircuit& circuit, double eta) {
  mode.validate();
  circuit.validate();
  return eta * eta / (mode.mass * mode.omega0 * circuit.effective_inductance());
}

PhononNumber feedback_phonon_number(const OscillatorMode& mode, const SquidCircuit& circuit, double eta) {
  if (eta == 0.0) fail(ErrorCode::ZeroCoupling, "coupling strength is zero");
  PhononNumber out;
  out.gain = cold_damping_gain(mode, circuit, eta);
  out.thermal = k_B * mode.T0 * mode.mass * mode.gamma * circuit.effective_inductance() / (hbar * eta * eta);
  out.backaction = 0.5 * (circuit.noise_product() / hbar - 1.0);
  out.total = out.thermal + out.backaction;
  out.gain_dominates = out.gain >= 10.0 * mode.gamma;
  return out;
}

double gas_damping(double pressure_pa, double gas_temperature, double molecule_mass, const SphereParams& sphere,
                   double beta) {
  require(pressure_pa >= 0.0, "pressure must be non-negative");
  require(gas_temperature > 0.0 && molecule_mass > 0.0, "gas temperature and molecule mass must be positive");
  const double v_th = std::sqrt(8.0 * k_B * gas_temperature / (pi * molecule_mass));
  return beta * pressure_pa / (sphere.density() * sphere.radius() * v_th);
}

double eddy_damping(double flux_gradient, const OscillatorMode& mode, double loop_inductance) {
  mode.validate();
  require(loop_inductance > 0.0, "loop inductance must be positive");
  return flux_gradient * flux_gradient / (2.0 * pi * mode.mass * mode.f0() * loop_inductance);
}

RlFilter RlFilter::from_components(double resistance, double inductance) {
  require(resistance > 0.0 && inductance > 0.0, "filter resistance and inductance must be positive");
  return {resistance / inductance};
}

double RlFilter::amplitude(double f_hz) const {
  require(kappa > 0.0, "filter cutoff must be positive");
  const double w = 2.0 * pi * f_hz;
  return kappa / std::sqrt(kappa * kappa + w * w);
}

double RlFilter::amplitude_db(double f_hz) const { return 20.0 * std::log10(amplitude(f_hz)); }

double RlFilter::psd_db(double f_hz) const {
  const double a = amplitude(f_hz);
  return 20.0 * std::log10(a * a);
}

double RlFilter::step_response(double t) const {
  require(kappa > 0.0, "filter cutoff must be positive");
  return t <= 0.0 ? 0.0 : -std::expm1(-kappa * t);
}

std::vector<BudgetLine> noise_budget(const BudgetInputs& in) {
  const auto& mode = in.mode;
  mode.validate();
  std::vector<BudgetLine> lines;
  auto add = [&](std::string q, double v, std::string u, std::string f) {
    lines.push_back({std::move(q), v, std::move(u), std::move(f)});
  };
  add("f0", mode.f0(), "Hz", "omega0/(2 pi)");
  add("gamma", mode.gamma, "1/s", "omega0/Q");
  add("Q", mode.q(), "1", "omega0/gamma");
  add("thermal_force_asd", thermal_force_noise(mode), "N/sqrt(Hz)", "sqrt(4 kB T0 m gamma)");
  add("thermal_accel_asd", thermal_acceleration_noise(mode), "m/s^2/sqrt(Hz)", "sqrt(4 kB T0 m gamma)/m");
  add("thermal_accel_asd_g", thermal_acceleration_noise(mode) / in.gravity, "g/sqrt(Hz)",
      "sqrt(4 kB T0 m gamma)/(m g)");
  add("gravity_sag", gravity_sag(mode.f0(), in.gravity), "m", "-g/(2 pi f0)^2");
  if (in.S_nn > 0.0) {
    add("force_sensitivity_resonance", force_sensitivity(mode, in.S_nn, mode.omega0), "N/sqrt(Hz)",
        "sqrt(4 kB T0 m gamma + |chi(omega0)|^-2 S_nn)");
    if (mode.gamma > 0.0) {
      add("noise_equivalent_temperature", noise_equivalent_temperature(mode, in.S_nn), "K",
          "T0 + |chi(omega0)|^-2 S_nn/(4 kB m gamma)");
    }
    if (in.drift_bin_hz > 0.0 && mode.gamma > 0.0) {
      add("drift_bin_width", in.drift_bin_hz, "Hz", "Delta f");
      add("drift_chi_ratio", std::norm(susceptibility(mode, mode.omega0)) / mean_susceptibility_sq(mode, in.drift_bin_hz),
          "1", "|chi(f0)|^2/|chi|^2_avg");
      add("drift_force_sensitivity", drift_averaged_sensitivity(mode, in.S_nn, in.drift_bin_hz), "N/sqrt(Hz)",
          "sqrt(4 kB T0 m gamma + |chi|_avg^-2 S_nn)");
      add("drift_noise_equivalent_temperature", drift_noise_equivalent_temperature(mode, in.S_nn, in.drift_bin_hz),
          "K", "T0 + |chi|_avg^-2 S_nn/(4 kB m gamma)");
    }
  }
  if (!in.S_epseps.is_zero() && mode.gamma > 0.0) {
    const auto v = vibration_response(mode, in.S_epseps);
    add("vibration_peak_asd", v.peak_asd, "m/sqrt(Hz)", "|chi(omega0)| m omega0^2 sqrt(S_eps)");
    add("vibration_rms", v.rms, "m", "sqrt(omega0^2 S_eps/(4 gamma))");
    add("vibration_T_eff", v.T_eff, "K", "m omega0^4 S_eps/(4 kB gamma)");
  }
  const auto rates = heating_rates(mode, in.S_epseps, in.S_deltadelta);
  add("Qdot_eps", rates.Qdot_eps, "W", "m omega0^4 S_eps(omega0)/4");
  add("Gamma_delta", rates.Gamma_delta, "1/s", "omega0^2 S_delta(2 omega0)/4");
  if (mode.gamma > 0.0) {
    add("T_eff", effective_temperature(mode, rates), "K", "(kB T0 gamma + Qdot_eps)/(kB (gamma - Gamma_delta))");
  }
  if (in.circuit && in.eta != 0.0) {
    const auto& c = *in.circuit;
    add("eta", in.eta, "Wb/m", "nu M/(L_P + L_I + L_W)");
    add("eta_phi0", to_flux_quanta(in.eta), "Phi0/m", "eta/Phi0");
    add("S_nn_squid", measurement_noise(in.eta, c.S_phiphi), "m^2/Hz", "S_phiphi/eta^2");
    if (c.S_JJ > 0.0) {
      add("eta_opt", optimal_eta(mode, c, mode.omega0), "Wb/m", "sqrt(sqrt(S_phiphi/S_JJ)/|chi(omega0)|)");
      add("S_zz_measured", sql_psd(mode, c, in.eta, mode.omega0), "m^2/Hz",
          "S_phiphi/eta^2 + |chi|^2 (S_FF + eta^2 S_JJ)");
      add("S_zz_sql_minimum", sql_minimum(mode, c, mode.omega0), "m^2/Hz",
          "2 |chi| sqrt(S_phiphi S_JJ) + |chi|^2 S_FF");
      const auto n = feedback_phonon_number(mode, c, in.eta);
      add("cold_damping_gain", n.gain, "1/s", "eta^2/(m omega0 L~)");
      add("phonon_thermal", n.thermal, "1", "kB T0 m gamma L~/(hbar eta^2)");
      add("phonon_backaction", n.backaction, "1", "(sqrt(S_phiphi S_JJ)/hbar - 1)/2");
      add("phonon_number", n.total, "1", "n_thermal + n_backaction");
    }
  }
  return lines;
}

}  // namespace maglev
