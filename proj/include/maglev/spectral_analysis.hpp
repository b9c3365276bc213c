#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace maglev {

enum class Window { Hann, Rectangular };

/// One-sided PSD table, units^2/Hz.
struct Psd {
  std::vector<double> f;    // Hz
  std::vector<double> psd;
  double df = 0.0;
  int segments = 0;
};

/// Welch average of mean-detrended, windowed segments. Scaling
/// 2 |X_k|^2 / (fs sum w^2), DC and Nyquist bins not doubled, so the sum of
/// psd * df equals the variance.
Psd welch_psd(std::span<const double> x, double fs, std::size_t segment_length, double overlap = 0.5,
              Window window = Window::Hann);

struct LorentzianFit {
  double f0 = 0.0;          // Hz
  double gamma = 0.0;       // 1/s
  double area = 0.0;        // C / (4 gamma omega0^2), units^2
  double amplitude = 0.0;   // C
  double background = 0.0;  // units^2/Hz
  double residual = 0.0;    // rms of log residuals
  int bins = 0;
  bool resolution_limited = false;  // gamma/2pi < 2 df
};

/// Fits S(f) = C / ((w0^2 - w^2)^2 + gamma^2 w^2) + B, w = 2 pi f, on the bins
/// in [f_lo, f_hi] by Levenberg-Marquardt on log residuals. Throws
/// BandTooNarrow below 8 bins.
LorentzianFit lorentzian_fit(const Psd& psd, double f_lo, double f_hi);

struct RingdownOptions {
  double periods_per_box = 20.0;    // boxcar length of the demodulator
  double jump_f_threshold = 50.0;   // F statistic for the two-segment model
  double jump_slope_ratio = 0.1;    // minimum relative slope change to flag
};

struct RingdownFit {
  double gamma = 0.0;     // 1/s
  double q = 0.0;
  double f0 = 0.0;        // Hz, refined from the demodulated phase
  double amplitude = 0.0; // envelope at t = 0
  double residual = 0.0;  // rms of log-envelope residuals
  bool jump = false;      // two-rate model fits significantly better
  double jump_time = 0.0; // s
  double gamma_before = 0.0;
  double gamma_after = 0.0;
};

/// Quadrature demodulation at f0_guess, boxcar-averaged envelope, and a linear
/// fit of log(envelope) with slope -gamma/2. Throws NoDecay if the slope is not
/// negative.
RingdownFit ringdown_q(std::span<const double> x, double fs, double f0_guess, const RingdownOptions& options = {});

struct CouplingCalibration {
  double eta = 0.0;          // flux units per displacement unit, e.g. Phi0/m
  double uncertainty = 0.0;  // absolute
  double flux_rms = 0.0;
  double displacement_rms = 0.0;
};

/// eta = rms(flux in band) / rms(displacement in band) from FFT band power.
/// The relative uncertainty of the displacement calibration carries over to
/// eta. Throws BandMismatch when either band holds no power above
/// `noise_floor` (variance units, default: 1e-20 of the series variance).
CouplingCalibration calibrate_coupling(std::span<const double> flux, std::span<const double> displacement, double fs,
                                       double f_lo, double f_hi, double relative_uncertainty = 0.13,
                                       double flux_noise_floor = -1.0, double displacement_noise_floor = -1.0);

}  // namespace maglev
