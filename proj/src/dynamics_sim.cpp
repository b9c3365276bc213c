#include "maglev/dynamics_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <deque>
#include <exception>
#include <random>
#include <sstream>
#include <optional>
#include <thread>

#include <fftw3.h>

#include <Eigen/Core>
#include <unsupported/Eigen/MatrixFunctions>

#include "maglev/constants.hpp"
#include "maglev/error.hpp"

namespace maglev {

using constants::k_B;
using constants::pi;

void SimConfig::validate() const {
  require(modes.size() == 1 || modes.size() == 3, "simulation takes one or three modes");
  require(dt > 0.0 && std::isfinite(dt), "simulation.dt must be positive");
  require(duration > 0.0 && std::isfinite(duration), "simulation.duration must be positive");
  require(record_every >= 1, "record_every must be at least 1");
  require(feedback.latency_steps >= 0, "feedback latency must be non-negative");
  require(feedback.gain >= 0.0 && std::isfinite(feedback.gain), "feedback gain must be non-negative");
  require(feedback.bandpass_width >= 0.0 && feedback.bandpass_center >= 0.0, "band-pass parameters must be non-negative");
  for (const auto& m : modes) {
    m.mode.validate();
    require(m.noise.S_nn >= 0.0, "S_nn must be non-negative");
    require(std::isfinite(m.x0) && std::isfinite(m.v0), "initial state must be finite");
    const double f0 = m.mode.f0();
    if (dt > 1.0 / (50.0 * f0) * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "simulation.dt = " << dt << " s exceeds 1/(50 f0) = " << 1.0 / (50.0 * f0) << " s for mode " << m.name;
      fail(ErrorCode::InvalidArgument, msg.str());
    }
    if (spectral && duration < 100.0 / f0 * (1.0 - 1e-12)) {
      std::ostringstream msg;
      msg << "simulation.duration = " << duration << " s is shorter than 100/f0 for mode " << m.name;
      fail(ErrorCode::InvalidArgument, msg.str());
    }
    if (feedback.enabled && feedback.bandpass_width > 0.0) {
      const double fc = feedback.bandpass_center > 0.0 ? feedback.bandpass_center : f0;
      require(fc < 0.5 / dt, "band-pass center must lie below the Nyquist frequency");
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

namespace {

void put(std::ostringstream& os, const char* key, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << key << '=' << buf << ';';
}

void put_curve(std::ostringstream& os, const char* key, const NoiseCurve& c) {
  os << key << "=[";
  for (std::size_t i = 0; i < c.values().size(); ++i) {
    put(os, "f", c.frequencies()[i]);
    put(os, "s", c.values()[i]);
  }
  os << "];";
}

}  // namespace

std::uint64_t config_digest(const SimConfig& c) {
  std::ostringstream os;
  for (const auto& m : c.modes) {
    os << "mode=" << m.name << ';';
    put(os, "mass", m.mode.mass);
    put(os, "omega0", m.mode.omega0);
    put(os, "gamma", m.mode.gamma);
    put(os, "T0", m.mode.T0);
    put_curve(os, "S_eps", m.noise.S_epseps);
    put_curve(os, "S_delta", m.noise.S_deltadelta);
    put(os, "S_nn", m.noise.S_nn);
    os << "thermal=" << m.noise.thermal << ';';
    put(os, "x0", m.x0);
    put(os, "v0", m.v0);
  }
  os << "fb=" << c.feedback.enabled << ';';
  put(os, "gain", c.feedback.gain);
  put(os, "bp_w", c.feedback.bandpass_width);
  put(os, "bp_c", c.feedback.bandpass_center);
  put(os, "phase", c.feedback.phase);
  os << "latency=" << c.feedback.latency_steps << ';';
  put(os, "dt", c.dt);
  put(os, "duration", c.duration);
  os << "seed=" << c.seed << ";integrator=" << static_cast<int>(c.integrator) << ";spectral=" << c.spectral
     << ";record=" << c.record_every << ";check=" << c.check_energy << ';';
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

enum Stream : std::uint64_t { kThermal = 0, kEps = 1, kDelta = 2, kMeas = 3 };

// Gaussian samples with one-sided PSD `curve` at rate 1/dt: white (one-point)
// curves are drawn step by step, tables are synthesized by FFT up front.
class NoiseStream {
 public:
  NoiseStream(const NoiseCurve& curve, double dt, std::size_t steps, std::uint64_t seed)
      : rng_(seed) {
    if (curve.is_zero()) return;
    active_ = true;
    if (curve.values().size() == 1) {
      sigma_ = std::sqrt(curve(1.0) / (2.0 * dt));
      return;
    }
    synthesize(curve, dt, steps);
  }

  // White stream with one-sided PSD `psd`.
  NoiseStream(double psd, double dt, std::uint64_t seed) : rng_(seed) {
    if (psd <= 0.0) return;
    active_ = true;
    sigma_ = std::sqrt(psd / (2.0 * dt));
  }

  double next() {
    if (!active_) return 0.0;
    if (colored_.empty()) return sigma_ * normal_(rng_);
    return colored_[index_++];
  }

 private:
  void synthesize(const NoiseCurve& curve, double dt, std::size_t steps) {
    const std::size_t n = std::max<std::size_t>(steps + (steps % 2), 2);
    const double fs = 1.0 / dt;
    std::vector<std::complex<double>> spec(n / 2 + 1);
    for (std::size_t k = 1; k < spec.size(); ++k) {
      const double f = k * fs / n;
      const double var = n * fs * curve(f) / 2.0;  // E|X_k|^2
      if (k == n / 2) {
        spec[k] = {std::sqrt(var) * normal_(rng_), 0.0};
      } else {
        const double s = std::sqrt(var / 2.0);
        spec[k] = {s * normal_(rng_), s * normal_(rng_)};
      }
    }
    colored_.assign(n, 0.0);
    fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(spec.data()),
                                          colored_.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (auto& v : colored_) v /= static_cast<double>(n);
  }

  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  bool active_ = false;
  double sigma_ = 0.0;
  std::vector<double> colored_;
  std::size_t index_ = 0;
};

// Constant-peak-gain band-pass biquad (RBJ cookbook).
class Bandpass {
 public:
  Bandpass(double center_hz, double width_hz, double dt) {
    const double w0 = 2.0 * pi * center_hz * dt;
    const double alpha = std::sin(w0) / (2.0 * center_hz / width_hz);
    const double a0 = 1.0 + alpha;
    b0_ = alpha / a0;
    b2_ = -alpha / a0;
    a1_ = -2.0 * std::cos(w0) / a0;
    a2_ = (1.0 - alpha) / a0;
  }

  double operator()(double in) {
    const double out = b0_ * in + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_, x1_ = in;
    y2_ = y1_, y1_ = out;
    return out;
  }

 private:
  double b0_, b2_, a1_, a2_;
  double x1_ = 0.0, x2_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

// One step of x'' + gamma x' + w0^2 x = a with a held constant.
class Propagator {
 public:
  Propagator(const OscillatorMode& m, double dt, Integrator kind) : w2_(m.omega0 * m.omega0), gamma_(m.gamma), dt_(dt), kind_(kind) {
    const double disc = w2_ - 0.25 * gamma_ * gamma_;
    if (disc > 0.0) {
      const double wd = std::sqrt(disc);
      const double e = std::exp(-0.5 * gamma_ * dt);
      const double c = std::cos(wd * dt);
      const double s = std::sin(wd * dt);
      m_ << e * (c + 0.5 * gamma_ / wd * s), e * s / wd, -e * w2_ / wd * s, e * (c - 0.5 * gamma_ / wd * s);
    } else {
      Eigen::Matrix2d a;
      a << 0.0, 1.0, -w2_, -gamma_;
      m_ = (a * dt).exp();
    }
  }

  void step(double& x, double& v, double accel) const {
    if (kind_ == Integrator::SemiImplicitEuler) {
      v += dt_ * (-w2_ * x - gamma_ * v + accel);
      x += dt_ * v;
      return;
    }
    const double shift = accel / w2_;
    const double y = x - shift;
    const double y1 = m_(0, 0) * y + m_(0, 1) * v;
    v = m_(1, 0) * y + m_(1, 1) * v;
    x = y1 + shift;
  }

 private:
  double w2_, gamma_, dt_;
  Integrator kind_;
  Eigen::Matrix2d m_;
};

TimeSeries run_mode(const SimConfig& cfg, std::size_t index, std::uint64_t digest) {
  const SimMode& sm = cfg.modes[index];
  const OscillatorMode& mode = sm.mode;
  const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));
  auto seed_for = [&](Stream s) { return splitmix64(cfg.seed ^ splitmix64((index << 8) | s)); };

  const double thermal_psd = sm.noise.thermal ? 4.0 * k_B * mode.T0 * mode.mass * mode.gamma : 0.0;
  NoiseStream thermal(thermal_psd, cfg.dt, seed_for(kThermal));
  NoiseStream eps(sm.noise.S_epseps, cfg.dt, steps, seed_for(kEps));
  NoiseStream delta(sm.noise.S_deltadelta, cfg.dt, steps, seed_for(kDelta));
  NoiseStream meas(sm.noise.S_nn, cfg.dt, seed_for(kMeas));

  const Propagator prop(mode, cfg.dt, cfg.integrator);
  const double w2 = mode.omega0 * mode.omega0;
  const auto& fb = cfg.feedback;
  const bool feedback = fb.enabled && fb.gain > 0.0;
  std::optional<Bandpass> bandpass;
  if (feedback && fb.bandpass_width > 0.0) {
    bandpass.emplace(fb.bandpass_center > 0.0 ? fb.bandpass_center : mode.f0(), fb.bandpass_width, cfg.dt);
  }
  std::deque<double> delay;
  double z_prev = 0.0;
  bool have_prev = false;

  // Energy bound: initial + bath + heating inputs, grown at the parametric rate.
  const double e0 = 0.5 * mode.mass * (sm.v0 * sm.v0 + w2 * sm.x0 * sm.x0);
  const auto rates = heating_rates(mode, sm.noise.S_epseps, sm.noise.S_deltadelta);
  const double p_fb = feedback ? mode.mass * fb.gain * fb.gain * sm.noise.S_nn / (2.0 * cfg.dt * cfg.dt) : 0.0;
  const double power = k_B * mode.T0 * mode.gamma + rates.Qdot_eps + p_fb;

  TimeSeries ts;
  ts.mode_name = sm.name;
  ts.sample_interval = cfg.dt * cfg.record_every;
  ts.seed = cfg.seed;
  ts.config_digest = digest;
  const std::size_t kept = (steps + cfg.record_every - 1) / cfg.record_every;
  ts.x.reserve(kept);
  ts.y.reserve(kept);
  ts.v.reserve(kept);

  double x = sm.x0, v = sm.v0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double y = x + meas.next();
    if (k % cfg.record_every == 0) {
      ts.x.push_back(x);
      ts.y.push_back(y);
      ts.v.push_back(v);
    }
    double applied = 0.0;
    if (feedback) {
      const double z = bandpass ? (*bandpass)(y) : y;
      const double u = have_prev ? (z - z_prev) / cfg.dt : 0.0;
      z_prev = z;
      have_prev = true;
      delay.push_back(std::cos(fb.phase) * u - std::sin(fb.phase) * mode.omega0 * z);
      if (static_cast<int>(delay.size()) > fb.latency_steps) {
        applied = delay.front();
        delay.pop_front();
      }
    }
    const double d = delta.next();
    const double accel = -w2 * d * x + w2 * (1.0 + d) * eps.next() - fb.gain * applied +
                         thermal.next() / mode.mass;
    prop.step(x, v, accel);

    if (!std::isfinite(x) || !std::isfinite(v)) {
      fail(ErrorCode::UnstableIntegration, "state became non-finite in mode " + sm.name);
    }
    if (cfg.check_energy && (k & 1023) == 1023) {
      const double t = (k + 1) * cfg.dt;
      const double bound = (e0 + k_B * mode.T0 + power * t) * std::exp(std::min(rates.Gamma_delta * t, 700.0));
      const double e = 0.5 * mode.mass * (v * v + w2 * x * x);
      if (e > 0.0 && e > 1e6 * bound) {
        std::ostringstream msg;
        msg << "mode " << sm.name << " energy " << e << " J exceeds 1e6 x the analytic bound " << bound
            << " J at t = " << t << " s";
        fail(ErrorCode::UnstableIntegration, msg.str());
      }
    }
  }
  return ts;
}

}  // namespace

SimResult simulate(const SimConfig& config) {
  config.validate();
  SimResult out;
  out.config_digest = config_digest(config);
  for (std::size_t i = 0; i < config.modes.size(); ++i) out.series.push_back(run_mode(config, i, out.config_digest));
  return out;
}

std::vector<SimResult> simulate_sweep(const std::vector<SimConfig>& configs, unsigned workers) {
  std::vector<SimResult> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, std::max<std::size_t>(1, configs.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        results[i] = simulate(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y) {
  const double n = static_cast<double>(t.size());
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i], sy += y[i], stt += t[i] * t[i], sty += t[i] * y[i];
  }
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  return {slope, (sy - slope * st) / n};
}

// Ensemble-mean energy per recorded sample.
std::vector<double> mean_energy(const SimConfig& base, int runs, std::uint64_t seed) {
  std::vector<SimConfig> configs(runs, base);
  for (int r = 0; r < runs; ++r) configs[r].seed = derive_seed(seed, r);
  const auto results = simulate_sweep(configs);
  const auto& m = base.modes.front().mode;
  std::vector<double> e(results.front().series.front().size(), 0.0);
  for (const auto& res : results) {
    const auto& s = res.series.front();
    for (std::size_t k = 0; k < e.size(); ++k) {
      e[k] += 0.5 * m.mass * (s.v[k] * s.v[k] + m.omega0 * m.omega0 * s.x[k] * s.x[k]) / runs;
    }
  }
  return e;
}

}  // namespace

std::vector<HeatingComparison> heating_validation(const HeatingValidationConfig& hv) {
  require(hv.runs >= 2 && hv.cycles > 0.0 && hv.steps_per_cycle >= 50, "heating validation needs runs, cycles and >= 50 steps per cycle");
  require(hv.S_epseps >= 0.0 && hv.S_deltadelta >= 0.0, "noise densities must be non-negative");
  SimConfig base;
  SimMode sm;
  sm.mode = OscillatorMode::from_gamma(hv.mass, hv.f0, 0.0, 0.0);
  sm.noise.thermal = false;
  base.dt = 1.0 / (hv.f0 * hv.steps_per_cycle);
  base.duration = hv.cycles / hv.f0;
  base.spectral = false;
  base.check_energy = false;

  std::vector<double> t;
  const auto steps = static_cast<std::size_t>(std::llround(base.duration / base.dt));
  for (std::size_t k = 0; k < steps; ++k) t.push_back(k * base.dt);

  std::vector<HeatingComparison> out;
  {
    SimConfig c = base;
    SimMode m = sm;
    m.noise.S_epseps = NoiseCurve::constant(hv.S_epseps);
    c.modes = {m};
    const auto e = mean_energy(c, hv.runs, derive_seed(hv.seed, 0));
    const double predicted = heating_rates(m.mode, m.noise.S_epseps, NoiseCurve{}).Qdot_eps;
    const double measured = fit_line(t, e).slope;
    out.push_back({"trap_center", predicted, measured, std::abs(measured / predicted - 1.0), "W"});
  }
  {
    SimConfig c = base;
    SimMode m = sm;
    m.noise.S_deltadelta = NoiseCurve::constant(hv.S_deltadelta);
    m.x0 = hv.initial_amplitude;
    c.modes = {m};
    auto e = mean_energy(c, hv.runs, derive_seed(hv.seed, 1));
    for (auto& v : e) v = std::log(v);
    const double predicted = heating_rates(m.mode, NoiseCurve{}, m.noise.S_deltadelta).Gamma_delta;
    const double measured = fit_line(t, e).slope;
    out.push_back({"spring_constant", predicted, measured, std::abs(measured / predicted - 1.0), "1/s"});
  }
  {
    SimConfig c = base;
    SimMode m = sm;
    m.x0 = hv.initial_amplitude;
    c.modes = {m};
    c.seed = derive_seed(hv.seed, 2);
    const auto res = simulate(c);
    const auto& s = res.series.front();
    const double w2 = m.mode.omega0 * m.mode.omega0;
    const double e0 = 0.5 * m.mode.mass * w2 * m.x0 * m.x0;
    const double e1 = 0.5 * m.mode.mass * (s.v.back() * s.v.back() + w2 * s.x.back() * s.x.back());
    const double measured = e1 / e0 - 1.0;
    out.push_back({"none", 0.0, measured, std::abs(measured), "1"});
  }
  return out;
}

}  // namespace maglev
