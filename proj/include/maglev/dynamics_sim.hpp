#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maglev/noise_budget.hpp"

namespace maglev {

/// Direct (cold-damping) feedback on the measured coordinate y = x + n. The
/// applied acceleration is -Gamma u', where u is the backward difference of
/// the (optionally band-passed) y and u' = cos(phase) u - sin(phase) omega0 z
/// rotates it by `phase`. The force acts `latency_steps` samples late.
struct FeedbackConfig {
  bool enabled = false;
  double gain = 0.0;              // Gamma, 1/s
  double bandpass_width = 0.0;    // Hz; 0 disables the band-pass
  double bandpass_center = 0.0;   // Hz; 0 centers it on each mode's f0
  double phase = 0.0;             // rad
  int latency_steps = 1;
};

enum class Integrator {
  /// Exact propagation of the damped oscillator with the remaining
  /// accelerations held constant over each step.
  Exact,
  /// Semi-implicit (symplectic) Euler-Maruyama.
  SemiImplicitEuler,
};

struct ModeNoise {
  NoiseCurve S_epseps;       // m^2/Hz
  NoiseCurve S_deltadelta;   // 1/Hz
  double S_nn = 0.0;         // m^2/Hz
  bool thermal = true;       // Langevin force sqrt(4 k_B T0 m gamma)
};

struct SimMode {
  std::string name = "z";
  OscillatorMode mode;
  ModeNoise noise;
  double x0 = 0.0;  // m
  double v0 = 0.0;  // m/s
};

struct SimConfig {
  std::vector<SimMode> modes;  // one or three, uncoupled
  FeedbackConfig feedback;
  double dt = 0.0;             // s, <= 1/(50 f0) for every mode
  double duration = 0.0;       // s
  std::uint64_t seed = 0;
  Integrator integrator = Integrator::Exact;
  bool spectral = true;        // enforce duration >= 100/f0
  int record_every = 1;        // keep one sample in this many steps
  bool check_energy = true;

  void validate() const;
};

struct TimeSeries {
  std::string mode_name;
  double sample_interval = 0.0;  // s
  std::vector<double> x;         // true position, m
  std::vector<double> y;         // measured position x + n, m
  std::vector<double> v;         // true velocity, m/s
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;

  std::size_t size() const { return x.size(); }
};

struct SimResult {
  std::vector<TimeSeries> series;  // one per mode, in config order
  std::uint64_t config_digest = 0;
};

/// Integrates m x'' = -m w0^2 (1 + delta)(x - eps) - m gamma x' - m Gamma u + F_th
/// for each mode. Noise streams are Gaussian: white curves as piecewise-constant
/// samples of variance S/(2 dt), tabulated curves by FFT spectral synthesis.
/// Every stream has its own generator seeded from (seed, mode, stream).
/// Throws UnstableIntegration when the energy exceeds 1e6 times the analytic
/// bound.
SimResult simulate(const SimConfig& config);

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);
/// Seed for sweep member `index`: splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);
/// FNV-1a 64 over a canonical text rendering of the configuration.
std::uint64_t config_digest(const SimConfig& config);

/// Runs `configs` on up to `workers` threads (0 = hardware concurrency).
/// Results are in input order and do not depend on the worker count.
std::vector<SimResult> simulate_sweep(const std::vector<SimConfig>& configs, unsigned workers = 0);

struct HeatingValidationConfig {
  double f0 = 1.0;               // Hz, scaled units
  double mass = 1.0;             // kg
  double S_epseps = 1e-4;        // m^2/Hz
  double S_deltadelta = 2e-2;    // 1/Hz
  double cycles = 10.0;          // run length in periods
  int runs = 400;
  int steps_per_cycle = 50;
  double initial_amplitude = 1.0;  // m, for the parametric runs
  std::uint64_t seed = 1;
};

struct HeatingComparison {
  std::string source;   // "trap_center", "spring_constant", "none"
  double predicted = 0.0;
  double measured = 0.0;
  double relative_error = 0.0;
  std::string units;
};

/// Ensemble runs with one noise source at a time (gamma = 0, no bath):
/// linear energy growth against Qdot_eps, exponential growth against
/// Gamma_delta, and no growth with both off.
std::vector<HeatingComparison> heating_validation(const HeatingValidationConfig& config);

}  // namespace maglev
