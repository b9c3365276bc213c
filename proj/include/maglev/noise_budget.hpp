#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "maglev/pickup_coupling.hpp"
#include "maglev/sphere_response.hpp"

namespace maglev {

/// One center-of-mass mode. Q is always derived from omega0 / gamma.
struct OscillatorMode {
  double mass = 0.0;    // kg
  double omega0 = 0.0;  // rad/s
  double gamma = 0.0;   // 1/s
  double T0 = 0.0;      // K

  static OscillatorMode from_q(double mass, double f0, double q, double T0);
  static OscillatorMode from_gamma(double mass, double f0, double gamma, double T0);

  double f0() const { return omega0 / (2.0 * constants::pi); }
  double q() const { return gamma > 0.0 ? omega0 / gamma : std::numeric_limits<double>::infinity(); }
  void validate() const;
};

/// One-sided PSD as a function of frequency in Hz. Tables are interpolated
/// linearly in (log f, log S) and held constant beyond the end points; a
/// segment touching S = 0 is interpolated linearly in S over log f.
class NoiseCurve {
 public:
  NoiseCurve() = default;
  static NoiseCurve constant(double psd);
  static NoiseCurve table(std::vector<double> freq_hz, std::vector<double> psd);

  double operator()(double f_hz) const;
  bool is_zero() const;
  const std::vector<double>& frequencies() const { return f_; }
  const std::vector<double>& values() const { return s_; }

 private:
  std::vector<double> f_;
  std::vector<double> s_;
};

struct NoiseSpec {
  NoiseCurve S_epseps;      // trap-center displacement, m^2/Hz
  NoiseCurve S_deltadelta;  // fractional spring constant, 1/Hz
  double S_nn = 0.0;        // measurement imprecision, m^2/Hz
  double eta = 0.0;         // Wb/m
  std::optional<SquidCircuit> circuit;
};

std::complex<double> susceptibility(const OscillatorMode& mode, double omega);

/// sqrt(4 k_B T0 m gamma), N/sqrt(Hz).
double thermal_force_noise(const OscillatorMode& mode);
/// thermal_force_noise / m, (m/s^2)/sqrt(Hz).
double thermal_acceleration_noise(const OscillatorMode& mode);

/// sqrt(4 k_B T0 m gamma + |chi(omega)|^-2 S_nn).
double force_sensitivity(const OscillatorMode& mode, double S_nn, double omega);
/// T0 + |chi(omega0)|^-2 S_nn / (4 k_B m gamma). Needs gamma > 0.
double noise_equivalent_temperature(const OscillatorMode& mode, double S_nn);

/// (1/df) * integral of |chi(f)|^2 over [f0 - df/2, f0 + df/2] by adaptive
/// Gauss-Kronrod quadrature. bin_width = 0 returns |chi(f0)|^2.
double mean_susceptibility_sq(const OscillatorMode& mode, double bin_width_hz);
/// force_sensitivity with |chi|^2 replaced by its bin average.
double drift_averaged_sensitivity(const OscillatorMode& mode, double S_nn, double bin_width_hz);
double drift_noise_equivalent_temperature(const OscillatorMode& mode, double S_nn, double bin_width_hz);

/// |chi(omega)|^2 m^2 omega0^4 S_eps(omega), m^2/Hz.
double vibration_displacement_psd(const OscillatorMode& mode, const NoiseCurve& S_epseps, double omega);

struct VibrationResponse {
  double peak_asd = 0.0;   // sqrt of the displacement PSD at omega0, m/sqrt(Hz)
  double energy = 0.0;     // Qdot_eps / gamma, J
  double rms = 0.0;        // sqrt(E / (m omega0^2)), m
  double T_eff = 0.0;      // E / k_B, K
};

/// Equilibrium under trap-center noise alone (bath and parametric terms off).
VibrationResponse vibration_response(const OscillatorMode& mode, const NoiseCurve& S_epseps);

struct HeatingRates {
  double Qdot_eps = 0.0;     // W
  double Gamma_delta = 0.0;  // 1/s
};

HeatingRates heating_rates(const OscillatorMode& mode, const NoiseCurve& S_epseps, const NoiseCurve& S_deltadelta);
/// (k_B T0 gamma + Qdot) / (k_B (gamma - Gamma_delta)). Throws UnstableHeating
/// when Gamma_delta >= gamma.
double effective_temperature(const OscillatorMode& mode, const HeatingRates& rates);

/// S_phiphi/eta^2 + |chi|^2 (S_FF_th + eta^2 S_JJ).
double sql_psd(const OscillatorMode& mode, const SquidCircuit& circuit, double eta, double omega);
/// eta^2 = sqrt(S_phiphi / S_JJ) / |chi(omega)|.
double optimal_eta(const OscillatorMode& mode, const SquidCircuit& circuit, double omega);
/// 2 |chi| sqrt(S_phiphi S_JJ) + |chi|^2 S_FF_th.
double sql_minimum(const OscillatorMode& mode, const SquidCircuit& circuit, double omega);

/// Gamma = eta^2 / (m omega0 L~), L~ = sqrt(S_phiphi / S_JJ).
double cold_damping_gain(const OscillatorMode& mode, const SquidCircuit& circuit, double eta);

struct PhononNumber {
  double thermal = 0.0;     // k_B T0 m gamma L~ / (hbar eta^2)
  double backaction = 0.0;  // (sqrt(S_phiphi S_JJ)/hbar - 1) / 2
  double total = 0.0;
  double gain = 0.0;        // cold damping Gamma, 1/s
  bool gain_dominates = true;  // Gamma >= 10 gamma, required for the formula
};

PhononNumber feedback_phonon_number(const OscillatorMode& mode, const SquidCircuit& circuit, double eta);

/// gamma_P = beta P / (rho R v_th), v_th = sqrt(8 k_B T / (pi m_molecule)).
double gas_damping(double pressure_pa, double gas_temperature, double molecule_mass, const SphereParams& sphere,
                   double beta = 1.8);

/// Worst case over the loop resistance: gamma = (d phi)^2 / (2 pi m f L_o).
double eddy_damping(double flux_gradient, const OscillatorMode& mode, double loop_inductance);

/// First-order RL low-pass, kappa = R_C / L_C.
struct RlFilter {
  double kappa = 0.0;  // 1/s

  static RlFilter from_components(double resistance, double inductance);

  double amplitude(double f_hz) const;      // kappa / sqrt(kappa^2 + omega^2)
  double amplitude_db(double f_hz) const;   // 20 log10(amplitude)
  double psd_db(double f_hz) const;         // 20 log10(amplitude^2), the convention of the -180 dB figure
  double step_response(double t) const;     // 1 - exp(-kappa t)
  double time_constant() const { return 1.0 / kappa; }
};

/// One labeled line of a budget report.
struct BudgetLine {
  std::string quantity;
  double value = 0.0;
  std::string units;
  std::string formula;
};

struct BudgetInputs {
  OscillatorMode mode;
  double S_nn = 0.0;
  double drift_bin_hz = 0.0;  // 0 disables the drift-averaged lines
  NoiseCurve S_epseps;
  NoiseCurve S_deltadelta;
  std::optional<SquidCircuit> circuit;
  double eta = 0.0;
  double gravity = constants::standard_gravity;
};

/// Every formula of this module evaluated for one mode, in report order.
std::vector<BudgetLine> noise_budget(const BudgetInputs& in);

}  // namespace maglev
