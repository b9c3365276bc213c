#include "maglev/spectral_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include <fftw3.h>

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "maglev/constants.hpp"
#include "maglev/error.hpp"

namespace maglev {

using constants::pi;

namespace {

// Real-to-complex transform of a fixed length, planned once.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }
  std::size_t bins() const { return n_ / 2 + 1; }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double mean_of(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double sse = 0.0;
};

Line fit_line(std::span<const double> t, std::span<const double> y) {
  const double tm = mean_of(t), ym = mean_of(y);
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
  }
  Line l;
  l.slope = stt > 0.0 ? sty / stt : 0.0;
  l.intercept = ym - l.slope * tm;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (l.intercept + l.slope * t[i]);
    l.sse += r * r;
  }
  return l;
}

}  // namespace

Psd welch_psd(std::span<const double> x, double fs, std::size_t segment_length, double overlap, Window window) {
  require(fs > 0.0, "sample rate must be positive");
  require(segment_length >= 8 && segment_length <= x.size(), "segment length must lie in [8, series length]");
  require(overlap >= 0.0 && overlap < 1.0, "overlap must lie in [0, 1)");
  const std::size_t len = segment_length;
  const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(len * (1.0 - overlap))));
  std::vector<double> w(len, 1.0);
  if (window == Window::Hann) {
    for (std::size_t i = 0; i < len; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * i / len);
  }
  const double wss = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

  RealFft fft(len);
  Psd out;
  out.df = fs / len;
  out.f.resize(fft.bins());
  out.psd.assign(fft.bins(), 0.0);
  for (std::size_t k = 0; k < fft.bins(); ++k) out.f[k] = k * out.df;
  for (std::size_t start = 0; start + len <= x.size(); start += step) {
    const auto seg = x.subspan(start, len);
    const double m = mean_of(seg);
    for (std::size_t i = 0; i < len; ++i) fft.input()[i] = (seg[i] - m) * w[i];
    fft.execute();
    for (std::size_t k = 0; k < fft.bins(); ++k) {
      const bool edge = k == 0 || (len % 2 == 0 && k == len / 2);
      out.psd[k] += (edge ? 1.0 : 2.0) * fft.power(k) / (fs * wss);
    }
    ++out.segments;
  }
  for (auto& v : out.psd) v /= out.segments;
  return out;
}

namespace {

struct LorentzFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::vector<double> f, log_s;
  double f_ref = 0.0, df = 1.0;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(f.size()); }

  // p = (ln C, (f0 - f_ref)/df, ln gamma, ln B)
  static double model(const Eigen::VectorXd& p, double fi, double f_ref, double df) {
    const double w0 = 2.0 * pi * (f_ref + p[1] * df);
    const double w = 2.0 * pi * fi;
    const double g = std::exp(p[2]);
    const double d = w0 * w0 - w * w;
    return std::exp(p[0]) / (d * d + g * g * w * w) + std::exp(p[3]);
  }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (std::size_t i = 0; i < f.size(); ++i) r[i] = std::log(model(p, f[i], f_ref, df)) - log_s[i];
    return 0;
  }
};

}  // namespace

LorentzianFit lorentzian_fit(const Psd& psd, double f_lo, double f_hi) {
  require(f_hi > f_lo, "fit band must have f_hi > f_lo");
  LorentzFunctor fn;
  fn.df = psd.df;
  std::vector<double> s;
  for (std::size_t k = 0; k < psd.f.size(); ++k) {
    if (psd.f[k] >= f_lo && psd.f[k] <= f_hi && psd.f[k] > 0.0 && psd.psd[k] > 0.0) {
      fn.f.push_back(psd.f[k]);
      s.push_back(psd.psd[k]);
    }
  }
  if (fn.f.size() < 8) {
    std::ostringstream msg;
    msg << "band [" << f_lo << ", " << f_hi << "] Hz holds " << fn.f.size() << " usable bins, need 8";
    fail(ErrorCode::BandTooNarrow, msg.str());
  }
  for (double v : s) fn.log_s.push_back(std::log(v));

  const std::size_t peak = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  const double b0 = std::max(sorted[sorted.size() / 8], 1e-12 * s[peak]);
  const double half = b0 + 0.5 * (s[peak] - b0);
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && s[lo - 1] >= half) --lo;
  while (hi + 1 < s.size() && s[hi + 1] >= half) ++hi;
  const double fwhm = std::max((hi - lo + 1) * psd.df, psd.df) * (hi == lo ? 0.5 : 1.0);
  fn.f_ref = fn.f[peak];
  const double w0 = 2.0 * pi * fn.f_ref;
  const double g0 = 2.0 * pi * fwhm;
  const double c0 = std::max(s[peak] - b0, 1e-300) * g0 * g0 * w0 * w0;

  Eigen::VectorXd p(4);
  p << std::log(c0), 0.0, std::log(g0), std::log(b0);
  Eigen::NumericalDiff<LorentzFunctor> nd(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LorentzFunctor>> lm(nd);
  lm.parameters.maxfev = 4000;
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-12;
  lm.minimize(p);

  LorentzianFit out;
  out.f0 = fn.f_ref + p[1] * psd.df;
  out.gamma = std::exp(p[2]);
  out.amplitude = std::exp(p[0]);
  out.background = std::exp(p[3]);
  const double w = 2.0 * pi * out.f0;
  out.area = out.amplitude / (4.0 * out.gamma * w * w);
  Eigen::VectorXd r(fn.values());
  fn(p, r);
  out.residual = std::sqrt(r.squaredNorm() / r.size());
  out.bins = fn.values();
  out.resolution_limited = out.gamma / (2.0 * pi) < 2.0 * psd.df;
  return out;
}

RingdownFit ringdown_q(std::span<const double> x, double fs, double f0_guess, const RingdownOptions& opt) {
  require(fs > 0.0 && f0_guess > 0.0 && f0_guess < 0.5 * fs, "ringdown needs 0 < f0 < fs/2");
  require(opt.periods_per_box > 0.0, "demodulator box must be positive");
  const auto box = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.periods_per_box * fs / f0_guess)));
  const std::size_t nbox = x.size() / box;
  require(nbox >= 8, "ringdown record too short for the demodulator box");

  const double w = 2.0 * pi * f0_guess;
  std::vector<double> t, log_env, phase;
  double prev_phase = 0.0;
  for (std::size_t b = 0; b < nbox; ++b) {
    double i_sum = 0.0, q_sum = 0.0;
    for (std::size_t k = b * box; k < (b + 1) * box; ++k) {
      const double tk = k / fs;
      i_sum += x[k] * std::cos(w * tk);
      q_sum += x[k] * std::sin(w * tk);
    }
    const double env = 2.0 * std::hypot(i_sum, q_sum) / box;
    if (!(env > 0.0)) continue;
    double ph = std::atan2(-q_sum, i_sum);
    if (!phase.empty()) ph = prev_phase + std::remainder(ph - prev_phase, 2.0 * pi);
    prev_phase = ph;
    t.push_back(((b + 0.5) * box - 0.5) / fs);
    log_env.push_back(std::log(env));
    phase.push_back(ph);
  }
  require(t.size() >= 8, "ringdown envelope vanished");

  const Line fit = fit_line(t, log_env);
  if (fit.slope >= 0.0) {
    std::ostringstream msg;
    msg << "envelope slope " << fit.slope << " 1/s is not negative";
    fail(ErrorCode::NoDecay, msg.str());
  }
  RingdownFit out;
  out.gamma = -2.0 * fit.slope;
  out.f0 = f0_guess + fit_line(t, phase).slope / (2.0 * pi);
  out.q = 2.0 * pi * out.f0 / out.gamma;
  out.amplitude = std::exp(fit.intercept);
  out.residual = std::sqrt(fit.sse / t.size());

  // Two-segment model: best breakpoint by total squared error.
  const std::size_t n = t.size();
  double best_sse = fit.sse;
  std::size_t best_j = 0;
  Line best_a, best_b;
  const std::span<const double> ts(t), ys(log_env);
  for (std::size_t j = 4; j + 4 <= n; ++j) {
    const Line a = fit_line(ts.first(j), ys.first(j));
    const Line b = fit_line(ts.subspan(j), ys.subspan(j));
    if (a.sse + b.sse < best_sse) {
      best_sse = a.sse + b.sse;
      best_j = j;
      best_a = a;
      best_b = b;
    }
  }
  if (best_j > 0) {
    const double floor = 1e-30 * n;
    const double f_stat = 0.5 * (fit.sse - best_sse) / (std::max(best_sse, floor) / (n - 4));
    const double scale = std::max(std::abs(best_a.slope), std::abs(best_b.slope));
    const double change = scale > 0.0 ? std::abs(best_a.slope - best_b.slope) / scale : 0.0;
    if (f_stat > opt.jump_f_threshold && change > opt.jump_slope_ratio) {
      out.jump = true;
      out.jump_time = 0.5 * (t[best_j - 1] + t[best_j]);
      out.gamma_before = -2.0 * best_a.slope;
      out.gamma_after = -2.0 * best_b.slope;
    }
  }
  return out;
}

namespace {

// Variance carried by the FFT bins in [f_lo, f_hi]; total variance in `total`.
double band_power(std::span<const double> x, double fs, double f_lo, double f_hi, double& total, std::size_t& bins) {
  const std::size_t n = x.size();
  RealFft fft(n);
  const double m = mean_of(x);
  for (std::size_t i = 0; i < n; ++i) fft.input()[i] = x[i] - m;
  fft.execute();
  double band = 0.0;
  total = 0.0;
  bins = 0;
  for (std::size_t k = 0; k < fft.bins(); ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    const double p = (edge ? 1.0 : 2.0) * fft.power(k) / (double(n) * n);
    total += p;
    const double f = k * fs / n;
    if (f >= f_lo && f <= f_hi) {
      band += p;
      ++bins;
    }
  }
  return band;
}

}  // namespace

CouplingCalibration calibrate_coupling(std::span<const double> flux, std::span<const double> displacement, double fs,
                                       double f_lo, double f_hi, double relative_uncertainty, double flux_floor,
                                       double disp_floor) {
  require(flux.size() == displacement.size() && flux.size() >= 8, "calibration series must match and hold >= 8 samples");
  require(fs > 0.0 && f_hi > f_lo && f_lo >= 0.0, "calibration band must satisfy 0 <= f_lo < f_hi");
  require(relative_uncertainty >= 0.0, "relative uncertainty must be non-negative");
  double flux_total = 0.0, disp_total = 0.0;
  std::size_t flux_bins = 0, disp_bins = 0;
  const double pf = band_power(flux, fs, f_lo, f_hi, flux_total, flux_bins);
  const double pd = band_power(displacement, fs, f_lo, f_hi, disp_total, disp_bins);
  if (flux_floor < 0.0) flux_floor = 1e-20 * flux_total;
  if (disp_floor < 0.0) disp_floor = 1e-20 * disp_total;
  if (flux_bins == 0 || pf <= flux_floor || pd <= disp_floor) {
    std::ostringstream msg;
    msg << "band [" << f_lo << ", " << f_hi << "] Hz carries no power above the noise floor (flux " << pf
        << ", displacement " << pd << ")";
    fail(ErrorCode::BandMismatch, msg.str());
  }
  CouplingCalibration out;
  out.flux_rms = std::sqrt(pf);
  out.displacement_rms = std::sqrt(pd);
  out.eta = out.flux_rms / out.displacement_rms;
  out.uncertainty = relative_uncertainty * out.eta;
  return out;
}

}  // namespace maglev
