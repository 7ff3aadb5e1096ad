#pragma once

// Signal conditioning primitives: Butterworth band-pass, z-score, linear
// resampling and a partial DFT over a band of bins.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "beliefhr/errors.hpp"

namespace beliefhr::dsp {

/// Biquad in transposed direct form II; a0 is implicitly 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Cascade of second-order sections.
class SosFilter {
 public:
  explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

  std::span<const Biquad> sections() const noexcept { return sections_; }

  /// Complex response at `freq_hz` for sampling rate `fs`.
  std::complex<double> response(double freq_hz, double fs) const {
    const double omega = 2.0 * std::numbers::pi * freq_hz / fs;
    std::complex<double> h = 1.0;
    for (const auto& s : sections_) h *= s.response(omega);
    return h;
  }

  /// Causal filtering. Section states start at the steady state for a constant
  /// input equal to x[0], so a DC offset produces no start-up transient.
  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(x.begin(), x.end());
    if (y.empty()) return y;
    double level = y[0];
    for (const auto& s : sections_) {
      const double out_level = level * s.dc_gain();
      double z2 = s.b2 * level - s.a2 * out_level;
      double z1 = s.b1 * level - s.a1 * out_level + z2;
      for (double& v : y) {
        const double in = v;
        const double out = s.b0 * in + z1;
        z1 = s.b1 * in - s.a1 * out + z2;
        z2 = s.b2 * in - s.a2 * out;
        v = out;
      }
      level = out_level;
    }
    return y;
  }

 private:
  std::vector<Biquad> sections_;
};

/// Digital Butterworth band-pass of prototype order `order` (2*order poles),
/// designed by low-pass to band-pass transform and the bilinear transform
/// with pre-warped corners.
inline SosFilter butterworth_bandpass(double fs, double f_lo, double f_hi, int order) {
  if (!(fs > 0.0)) throw ParameterError("bandpass: sampling rate must be > 0");
  if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < fs / 2.0)) {
    throw ParameterError("bandpass: corners must satisfy 0 < f_lo < f_hi < fs/2 (f_lo=" +
                         std::to_string(f_lo) + ", f_hi=" + std::to_string(f_hi) +
                         ", fs=" + std::to_string(fs) + ")");
  }
  if (order < 1) throw ParameterError("bandpass: order must be >= 1");
  using C = std::complex<double>;
  const double pi = std::numbers::pi;
  const double k2fs = 2.0 * fs;
  const double w_lo = k2fs * std::tan(pi * f_lo / fs);
  const double w_hi = k2fs * std::tan(pi * f_hi / fs);
  const double bw = w_hi - w_lo;
  const double w0 = std::sqrt(w_lo * w_hi);

  std::vector<C> poles;
  for (int m = -order + 1; m < order; m += 2) {
    const C proto = -std::polar(1.0, pi * m / (2.0 * order));
    const C half = proto * (bw / 2.0);
    const C root = std::sqrt(half * half - w0 * w0);
    for (const C& s : {half + root, half - root}) poles.push_back((k2fs + s) / (k2fs - s));
  }

  // Conjugate pairs become one section each; real poles are paired in order.
  std::vector<Biquad> sections;
  std::vector<double> real_poles;
  constexpr double kImagEps = 1e-12;
  for (const C& p : poles) {
    if (p.imag() > kImagEps) {
      sections.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
    } else if (std::abs(p.imag()) <= kImagEps) {
      real_poles.push_back(p.real());
    }
  }
  std::sort(real_poles.begin(), real_poles.end());
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double r1 = real_poles[i], r2 = real_poles[i + 1];
    sections.push_back({1.0, 0.0, -1.0, -(r1 + r2), r1 * r2});
  }
  std::sort(sections.begin(), sections.end(),
            [](const Biquad& a, const Biquad& b) { return a.a2 < b.a2; });

  // Unity gain at the band center (geometric mean of the pre-warped corners).
  SosFilter unscaled(sections);
  const double f_center = fs / pi * std::atan(w0 / k2fs);
  const double g = 1.0 / std::abs(unscaled.response(f_center, fs));
  sections.front().b0 *= g;
  sections.front().b1 *= g;
  sections.front().b2 *= g;
  return SosFilter(std::move(sections));
}

inline std::vector<double> bandpass(std::span<const double> signal, double fs, double f_lo = 0.1,
                                    double f_hi = 18.0, int order = 4) {
  return butterworth_bandpass(fs, f_lo, f_hi, order).apply(signal);
}

inline constexpr double kZscoreEpsilon = 1e-8;

/// Zero mean, unit population std. Constant input maps to zeros.
inline std::vector<double> zscore(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (sd < kZscoreEpsilon) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& v : out) v = (v - mean) / sd;
  return out;
}

/// Linear interpolation onto `n_out` samples at fs_out; constant beyond the last input sample.
inline std::vector<double> resample(std::span<const double> x, double fs_in, double fs_out,
                                    std::size_t n_out) {
  if (x.empty()) throw ParameterError("resample: empty input");
  if (!(fs_in > 0.0 && fs_out > 0.0)) throw ParameterError("resample: rates must be > 0");
  std::vector<double> y(n_out);
  const std::size_t last = x.size() - 1;
  const double ratio = fs_in / fs_out;
  for (std::size_t k = 0; k < n_out; ++k) {
    const double pos = static_cast<double>(k) * ratio;
    const auto i = static_cast<std::size_t>(pos);
    if (i >= last) {
      y[k] = x[last];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    y[k] = (1.0 - frac) * x[i] + frac * x[i + 1];
  }
  return y;
}

/// Output length round(n_in * fs_out / fs_in).
inline std::vector<double> resample(std::span<const double> x, double fs_in, double fs_out) {
  if (x.empty()) throw ParameterError("resample: empty input");
  if (!(fs_in > 0.0 && fs_out > 0.0)) throw ParameterError("resample: rates must be > 0");
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * fs_out / fs_in));
  return resample(x, fs_in, fs_out, n_out);
}

/// Magnitudes |X_k| for k in [k_lo, k_lo + count) of the n_fft-point DFT of x,
/// zero-padded (or truncated) to n_fft samples.
class BandDft {
 public:
  BandDft(std::size_t n_fft, std::size_t k_lo, std::size_t count)
      : n_fft_(n_fft), k_lo_(k_lo), count_(count), cos_(n_fft), sin_(n_fft) {
    if (n_fft == 0 || k_lo + count > n_fft) throw ParameterError("BandDft: bin range exceeds FFT size");
    for (std::size_t m = 0; m < n_fft; ++m) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n_fft);
      cos_[m] = std::cos(a);
      sin_[m] = std::sin(a);
    }
  }

  std::size_t count() const noexcept { return count_; }

  void magnitudes(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = std::min(x.size(), n_fft_);
    for (std::size_t b = 0; b < count_; ++b) {
      const std::size_t k = k_lo_ + b;
      double re = 0.0, im = 0.0;
      std::size_t idx = 0;  // (k * t) mod n_fft
      for (std::size_t t = 0; t < n; ++t) {
        re += x[t] * cos_[idx];
        im -= x[t] * sin_[idx];
        idx += k;
        if (idx >= n_fft_) idx -= n_fft_;
      }
      out[b] = std::hypot(re, im);
    }
  }

  std::vector<double> magnitudes(std::span<const double> x) const {
    std::vector<double> out(count_);
    magnitudes(x, out);
    return out;
  }

 private:
  std::size_t n_fft_, k_lo_, count_;
  std::vector<double> cos_, sin_;
};

}  // namespace beliefhr::dsp
