#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "atomcav/integrate.hpp"
#include "atomcav/params.hpp"

namespace atomcav {

inline double wrap_phase(double phi) {
  phi = std::fmod(phi, kTwoPi);
  if (phi > M_PI) phi -= kTwoPi;
  if (phi <= -M_PI) phi += kTwoPi;
  return phi;
}

enum class WindowFn { Rectangular, Hann };

// Single-sided discrete Fourier amplitude spectrum of a mean-subtracted
// observable window. amp[k] is normalized so a pure tone on bin k appears
// with its signal amplitude and phase: x_j = A cos(2 pi f_k t_j + phi)
// gives amp[k] = A e^{i phi} (up to the window factor).
struct Spectrum {
  std::vector<double> freq_hz;
  std::vector<cplx> amp;
  double window_start = 0.0;   // absolute time of the first sample
  double window_length = 0.0;  // n_samples * dt
  std::size_t n_samples = 0;
  WindowFn window = WindowFn::Rectangular;
  bool is_power = false;

  double resolution() const { return 1.0 / window_length; }

  std::size_t nearest_bin(double f_hz) const {
    double idx = f_hz / resolution();
    long k = std::lround(idx);
    if (k < 0) k = 0;
    if (k >= static_cast<long>(freq_hz.size()))
      k = static_cast<long>(freq_hz.size()) - 1;
    return static_cast<std::size_t>(k);
  }

  double magnitude(std::size_t k) const {
    return is_power ? amp[k].real() : std::abs(amp[k]);
  }
};

namespace detail {

inline void fft_forward(std::vector<cplx>& in, std::vector<cplx>& out) {
  static std::mutex mutex;
  static std::map<std::size_t, fftw_plan> plans;
  const std::size_t n = in.size();
  out.resize(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = plans.find(n);
    if (it == plans.end()) {
      plan = fftw_plan_dft_1d(static_cast<int>(n),
                              reinterpret_cast<fftw_complex*>(in.data()),
                              reinterpret_cast<fftw_complex*>(out.data()),
                              FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
      plans.emplace(n, plan);
    } else {
      plan = it->second;
    }
  }
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

inline Spectrum compute_spectrum(std::span<const double> samples, double dt,
                                 double t_start = 0.0,
                                 WindowFn window = WindowFn::Rectangular) {
  const std::size_t n = samples.size();
  if (n < 64) throw std::invalid_argument("spectrum window needs >= 64 samples");

  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);

  std::vector<cplx> in(n), out;
  for (std::size_t j = 0; j < n; ++j) {
    double w = 1.0;
    if (window == WindowFn::Hann)
      w = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(j) / n));
    in[j] = cplx((samples[j] - mean) * w, 0.0);
  }
  detail::fft_forward(in, out);

  Spectrum spec;
  spec.window_start = t_start;
  spec.window_length = static_cast<double>(n) * dt;
  spec.n_samples = n;
  spec.window = window;
  const std::size_t n_half = n / 2;
  spec.freq_hz.resize(n_half + 1);
  spec.amp.resize(n_half + 1);
  for (std::size_t k = 0; k <= n_half; ++k) {
    spec.freq_hz[k] = static_cast<double>(k) / spec.window_length;
    double scale = (k == 0 || (n % 2 == 0 && k == n_half)) ? 1.0 : 2.0;
    spec.amp[k] = out[k] * (scale / static_cast<double>(n));
  }
  return spec;
}

// Spectrum of one observable column over [from, to) of a trajectory record.
inline Spectrum compute_spectrum(const TrajectoryRecord& rec,
                                 std::span<const double> column, double from,
                                 double to,
                                 WindowFn window = WindowFn::Rectangular) {
  const double dt = rec.sample_interval;
  if (from < rec.t.front() - 1e-12 || to > rec.t.back() + dt * 0.5)
    throw std::invalid_argument("analysis window outside the record span");
  const std::size_t i0 =
      static_cast<std::size_t>(std::llround((from - rec.t.front()) / dt));
  const std::size_t count =
      static_cast<std::size_t>(std::llround((to - from) / dt));
  if (i0 + count > column.size())
    throw std::invalid_argument("analysis window outside the record span");
  return compute_spectrum(column.subspan(i0, count), dt, rec.t[i0], window);
}

inline Spectrum photon_spectrum(const TrajectoryRecord& rec, double from,
                                double to,
                                WindowFn window = WindowFn::Rectangular) {
  return compute_spectrum(rec, rec.n_photon, from, to, window);
}

// Spectrum over the record's flagged analysis window.
inline Spectrum photon_spectrum(const TrajectoryRecord& rec,
                                WindowFn window = WindowFn::Rectangular) {
  if (!rec.analysis) throw std::invalid_argument("record has no analysis window");
  return photon_spectrum(rec, rec.analysis->start,
                         rec.analysis->start + rec.analysis->length, window);
}

inline Spectrum power_spectrum(Spectrum s) {
  for (cplx& c : s.amp) c = cplx(std::norm(c), 0.0);
  s.is_power = true;
  return s;
}

// Amplitude of the single-sided spectrum at the grid frequency nearest
// omega_dr / 2 (the raw subharmonic response S).
inline double subharmonic_response(const Spectrum& spec, double omega_dr) {
  double f_half = omega_dr / 2.0 / kTwoPi;
  if (f_half > spec.freq_hz.back())
    throw std::invalid_argument("omega_dr/2 outside the spectral range");
  return spec.magnitude(spec.nearest_bin(f_half));
}

// Relative S over a batch: each value divided by the batch maximum.
inline std::vector<double> normalize_subharmonic(std::vector<double> raw) {
  double mx = 0.0;
  for (double v : raw) mx = std::max(mx, v);
  if (mx > 0.0)
    for (double& v : raw) v /= mx;
  return raw;
}

struct PeakFit {
  double center = 0.0;     // rad/s
  double amplitude = 0.0;
  double width = 0.0;      // Gaussian sigma, rad/s
  double offset = 0.0;
  double residual = 0.0;   // rms of the fit residual
  bool converged = false;  // false => max-bin fallback was used
};

namespace detail {

// Solves the 4x4 system a x = b in place (partial pivoting).
inline bool solve4(std::array<std::array<double, 4>, 4>& a,
                   std::array<double, 4>& b) {
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-300) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < 4; ++r) {
      double f = a[r][c] / a[c][c];
      for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (int c = 3; c >= 0; --c) {
    for (int k = c + 1; k < 4; ++k) b[c] -= a[c][k] * b[k];
    b[c] /= a[c][c];
  }
  return true;
}

// Levenberg-Marquardt fit of A exp(-(f-f0)^2 / (2 s^2)) + C.
struct GaussFit {
  double f0, a, sigma, c;
  double rms = 0.0;
  bool ok = false;
};

inline GaussFit fit_gaussian(std::span<const double> f,
                             std::span<const double> y) {
  const std::size_t n = f.size();
  GaussFit fit;
  // Initial guess from the max bin and the band edges.
  std::size_t imax = 0;
  double ymin = y[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] > y[imax]) imax = i;
    ymin = std::min(ymin, y[i]);
  }
  double df = (f.back() - f.front()) / static_cast<double>(n - 1);
  fit.f0 = f[imax];
  fit.a = y[imax] - ymin;
  fit.sigma = 1.5 * df;
  fit.c = ymin;
  if (fit.a <= 0.0) return fit;

  double lambda = 1e-3;
  auto chi2 = [&](const GaussFit& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = std::exp(-0.5 * (f[i] - g.f0) * (f[i] - g.f0) /
                          (g.sigma * g.sigma));
      double r = g.a * e + g.c - y[i];
      s += r * r;
    }
    return s;
  };
  double cost = chi2(fit);
  bool accepted_any = false;

  for (int iter = 0; iter < 200; ++iter) {
    std::array<std::array<double, 4>, 4> jtj{};
    std::array<double, 4> jtr{};
    for (std::size_t i = 0; i < n; ++i) {
      double u = (f[i] - fit.f0) / fit.sigma;
      double e = std::exp(-0.5 * u * u);
      double r = fit.a * e + fit.c - y[i];
      std::array<double, 4> j = {fit.a * e * u / fit.sigma,  // d/df0
                                 e,                          // d/dA
                                 fit.a * e * u * u / fit.sigma,  // d/dsigma
                                 1.0};                       // d/dC
      for (int p = 0; p < 4; ++p) {
        jtr[p] += j[p] * r;
        for (int q = 0; q < 4; ++q) jtj[p][q] += j[p] * j[q];
      }
    }
    auto a_mat = jtj;
    for (int p = 0; p < 4; ++p) a_mat[p][p] *= 1.0 + lambda;
    std::array<double, 4> step = {-jtr[0], -jtr[1], -jtr[2], -jtr[3]};
    if (!solve4(a_mat, step)) break;
    GaussFit trial = fit;
    trial.f0 += step[0];
    trial.a += step[1];
    trial.sigma += step[2];
    trial.c += step[3];
    if (!(std::abs(trial.sigma) > 1e-12 * df)) trial.sigma = 1e-12 * df;
    double trial_cost = chi2(trial);
    if (trial_cost < cost) {
      double delta = cost - trial_cost;
      fit = trial;
      cost = trial_cost;
      lambda = std::max(lambda * 0.3, 1e-12);
      accepted_any = true;
      if (delta < 1e-12 * (cost + 1e-300)) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  fit.sigma = std::abs(fit.sigma);
  fit.rms = std::sqrt(cost / static_cast<double>(n));
  // Sanity: center inside the band, positive amplitude.
  fit.ok = accepted_any && fit.a > 0.0 && fit.f0 >= f.front() - df &&
           fit.f0 <= f.back() + df;
  return fit;
}

}  // namespace detail

// Gaussian-plus-constant least-squares fit over +-5 bins around the largest
// bin inside [band_lo, band_hi] (rad/s). Falls back to the max bin when the
// fit does not converge, flagged through `converged`.
inline PeakFit fit_dominant_peak(const Spectrum& spec, double band_lo,
                                 double band_hi) {
  const double res = spec.resolution();
  std::size_t k_lo = spec.nearest_bin(band_lo / kTwoPi);
  std::size_t k_hi = spec.nearest_bin(band_hi / kTwoPi);
  if (k_lo > k_hi) std::swap(k_lo, k_hi);
  if (k_lo == 0) k_lo = 1;  // mean-subtracted: DC carries nothing
  if (k_hi >= spec.freq_hz.size()) k_hi = spec.freq_hz.size() - 1;
  if (k_hi - k_lo + 1 < 7)
    throw std::invalid_argument("peak search band must contain >= 7 bins");

  std::size_t imax = k_lo;
  for (std::size_t k = k_lo; k <= k_hi; ++k)
    if (spec.magnitude(k) > spec.magnitude(imax)) imax = k;

  const std::size_t w_lo = imax >= 5 ? imax - 5 : 1;
  const std::size_t w_hi = std::min(imax + 5, spec.freq_hz.size() - 1);
  std::vector<double> fs, ys;
  for (std::size_t k = w_lo; k <= w_hi; ++k) {
    fs.push_back(spec.freq_hz[k]);
    ys.push_back(spec.magnitude(k));
  }
  detail::GaussFit g = detail::fit_gaussian(fs, ys);

  PeakFit out;
  if (g.ok) {
    out.center = g.f0 * kTwoPi;
    out.amplitude = std::max(g.a, 0.0);
    out.width = g.sigma * kTwoPi;
    out.offset = g.c;
    out.residual = g.rms;
    out.converged = true;
  } else {
    out.center = spec.freq_hz[imax] * kTwoPi;
    out.amplitude = spec.magnitude(imax);
    out.width = res * kTwoPi;
    out.residual = 0.0;
    out.converged = false;
  }
  return out;
}

struct PhaseEstimate {
  double phase = 0.0;      // in (-pi, pi], relative to the drive
  double amplitude = 0.0;  // bin magnitude
  bool low_confidence = false;
};

// Phase of the complex amplitude at the bin nearest `omega`, rotated by the
// drive phase at window start so the value is referenced to the drive clock.
inline PhaseEstimate extract_phase(const Spectrum& spec, double omega,
                                   double drive_phase_at_window_start) {
  if (spec.is_power)
    throw std::invalid_argument("phase extraction needs a complex spectrum");
  std::size_t k = spec.nearest_bin(omega / kTwoPi);
  PhaseEstimate est;
  est.amplitude = std::abs(spec.amp[k]);
  est.phase = wrap_phase(std::arg(spec.amp[k]) - drive_phase_at_window_start);
  // Noise floor: median magnitude across the spectrum.
  std::vector<double> mags(spec.amp.size());
  for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(spec.amp[i]);
  std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
  est.low_confidence = est.amplitude < 3.0 * mags[mags.size() / 2];
  return est;
}

inline PhaseEstimate extract_phase(const TrajectoryRecord& rec,
                                   const DriveProgram& program, double omega,
                                   WindowFn window = WindowFn::Rectangular) {
  Spectrum spec = photon_spectrum(rec, window);
  return extract_phase(spec, omega,
                       program.drive_phase_at(spec.window_start));
}

struct CrystallineFraction {
  double xi = 0.0;
  bool defined = false;
};

// Ratio of the fitted dominant power-spectrum peaks (fluctuating ensemble over
// idealized reference). Undefined when the reference peak vanishes.
inline CrystallineFraction crystalline_fraction(const Spectrum& twa_power,
                                                const Spectrum& mf_power,
                                                double band_lo, double band_hi) {
  if (!twa_power.is_power || !mf_power.is_power)
    throw std::invalid_argument("crystalline fraction needs power spectra");
  PeakFit mf = fit_dominant_peak(mf_power, band_lo, band_hi);
  PeakFit twa = fit_dominant_peak(twa_power, band_lo, band_hi);
  CrystallineFraction out;
  if (mf.amplitude <= 0.0) return out;
  out.xi = twa.amplitude / mf.amplitude;
  out.defined = true;
  return out;
}

enum class SpectralClass { Periodic, Quasiperiodic };

struct Sideband {
  double frequency = 0.0;  // rad/s
  double amplitude = 0.0;
  double ratio = 0.0;      // relative to the main peak
};

struct SidebandReport {
  SpectralClass classification = SpectralClass::Periodic;
  std::vector<Sideband> sidebands;
  double main_frequency = 0.0;
  double main_amplitude = 0.0;
  double expected_splitting = 0.0;  // rad/s
};

// Searches for beat sidebands around the main peak at the splitting set by
// the distance to the subharmonic lock point, delta = |omega_main -
// omega_dr/2|. A limit-torus intensity trace carries a comb at odd multiples
// of delta around omega_dr/2, so lines appear at omega_main ± 2 delta (and at
// omega_main ± delta for an amplitude-modulated envelope); both families are
// searched. Candidates must be local maxima above `threshold` relative to
// the main peak. Any hit classifies the run quasiperiodic.
inline SidebandReport detect_sidebands(const Spectrum& spec, double omega_main,
                                       double omega_dr,
                                       double threshold = 0.05) {
  SidebandReport rep;
  const double res_rad = spec.resolution() * kTwoPi;
  const std::size_t k_main = spec.nearest_bin(omega_main / kTwoPi);
  rep.main_frequency = spec.freq_hz[k_main] * kTwoPi;
  rep.main_amplitude = spec.magnitude(k_main);
  const double delta = std::abs(omega_main - 0.5 * omega_dr);
  rep.expected_splitting = delta;
  if (delta < 1.5 * res_rad || rep.main_amplitude <= 0.0) return rep;

  std::vector<std::size_t> found;
  for (double mult : {-2.0, -1.0, 1.0, 2.0}) {
    double target = omega_main + mult * delta;
    if (target <= 0.0 || target / kTwoPi > spec.freq_hz.back()) continue;
    std::size_t k_t = spec.nearest_bin(target / kTwoPi);
    std::size_t lo = k_t >= 2 ? k_t - 2 : 0;
    std::size_t hi = std::min(k_t + 2, spec.freq_hz.size() - 1);
    std::size_t best = lo;
    for (std::size_t k = lo; k <= hi; ++k)
      if (spec.magnitude(k) > spec.magnitude(best)) best = k;
    if (best + 2 >= k_main && best <= k_main + 2) continue;  // main-peak skirt
    if (std::find(found.begin(), found.end(), best) != found.end()) continue;
    bool local_max = best > 0 && best + 1 < spec.freq_hz.size() &&
                     spec.magnitude(best) > spec.magnitude(best - 1) &&
                     spec.magnitude(best) > spec.magnitude(best + 1);
    double amp = spec.magnitude(best);
    if (local_max && amp >= threshold * rep.main_amplitude) {
      found.push_back(best);
      Sideband sb;
      sb.frequency = spec.freq_hz[best] * kTwoPi;
      sb.amplitude = amp;
      sb.ratio = amp / rep.main_amplitude;
      rep.sidebands.push_back(sb);
    }
  }
  if (!rep.sidebands.empty()) rep.classification = SpectralClass::Quasiperiodic;
  return rep;
}

}  // namespace atomcav
