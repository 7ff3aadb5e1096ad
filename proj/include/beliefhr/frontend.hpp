#pragma once

// Recording -> analysis windows. Each window carries a resampled time-domain
// PPG trace and a short-time magnitude spectrogram of PPG and accelerometer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "beliefhr/dsp.hpp"
#include "beliefhr/errors.hpp"

namespace beliefhr {

enum class ChannelKind { kPpg, kAccel };

struct Channel {
  std::string name;
  ChannelKind kind = ChannelKind::kPpg;
  std::vector<double> samples;
};

struct Label {
  double time = 0.0;  // s
  double bpm = 0.0;
  std::string tag;    // activity tag, may be empty
};

struct RawSession {
  std::string id;
  double start_time = 0.0;  // time of sample 0, s
  double ppg_rate = 0.0;    // Hz
  double acc_rate = 0.0;    // Hz; unused without accel channels
  std::vector<Channel> channels;
  std::vector<Label> labels;

  std::vector<const Channel*> of_kind(ChannelKind kind) const {
    std::vector<const Channel*> out;
    for (const auto& c : channels)
      if (c.kind == kind) out.push_back(&c);
    return out;
  }

  /// Duration covered by the PPG channels.
  double duration() const {
    const auto ppg = of_kind(ChannelKind::kPpg);
    if (ppg.empty() || ppg_rate <= 0.0) return 0.0;
    return static_cast<double>(ppg.front()->samples.size()) / ppg_rate;
  }

  void validate() const {
    const auto ppg = of_kind(ChannelKind::kPpg);
    if (ppg.empty()) throw ValidationError("session " + id + ": no PPG channel");
    if (!(ppg_rate > 0.0)) throw ValidationError("session " + id + ": PPG sampling rate must be > 0");
    for (const auto* c : ppg) {
      if (c->samples.size() != ppg.front()->samples.size())
        throw ValidationError("session " + id + ": PPG channels differ in length");
    }
    const auto acc = of_kind(ChannelKind::kAccel);
    if (!acc.empty()) {
      if (!(acc_rate > 0.0)) throw ValidationError("session " + id + ": accel sampling rate must be > 0");
      for (const auto* c : acc) {
        if (c->samples.empty()) throw ValidationError("session " + id + ": accel channel " + c->name + " is empty");
        if (c->samples.size() != acc.front()->samples.size())
          throw ValidationError("session " + id + ": accel channels differ in length");
      }
    }
    for (std::size_t i = 1; i < labels.size(); ++i) {
      if (!(labels[i].time > labels[i - 1].time))
        throw ValidationError("session " + id + ": label times not strictly increasing at label " +
                              std::to_string(i + 1));
    }
  }
};

/// Heart rate at `time` by linear interpolation between labels (clamped at the ends).
inline double interpolate_label(std::span<const Label> labels, double time) {
  if (labels.empty()) throw InsufficientDataError("no labels to interpolate");
  if (time <= labels.front().time) return labels.front().bpm;
  if (time >= labels.back().time) return labels.back().bpm;
  const auto it = std::upper_bound(labels.begin(), labels.end(), time,
                                   [](double t, const Label& l) { return t < l.time; });
  const Label& b = *it;
  const Label& a = *(it - 1);
  const double f = (time - a.time) / (b.time - a.time);
  return a.bpm + f * (b.bpm - a.bpm);
}

/// Tag of the last label at or before `time`.
inline std::string label_tag(std::span<const Label> labels, double time) {
  std::string tag;
  for (const auto& l : labels) {
    if (l.time > time) break;
    tag = l.tag;
  }
  if (tag.empty() && !labels.empty()) tag = labels.front().tag;
  return tag;
}

struct FrontendConfig {
  double window_s = 20.0;
  double shift_s = 2.0;  // prediction interval
  double bp_lo_hz = 0.1;
  double bp_hi_hz = 18.0;
  int bp_order = 4;
  double time_rate_hz = 64.0;
  double sub_window_s = 8.0;
  double sub_shift_s = 2.0;
  double spec_rate_hz = 25.0;
  std::size_t n_fft = 535;
  std::size_t first_bin = 11;
  std::size_t spec_bins = 64;

  std::size_t time_length() const {
    return static_cast<std::size_t>(std::llround(window_s * time_rate_hz));
  }
  std::size_t sub_windows() const {
    return static_cast<std::size_t>(std::floor((window_s - sub_window_s) / sub_shift_s + 1e-9)) + 1;
  }
  std::size_t sub_length() const {
    return static_cast<std::size_t>(std::llround(sub_window_s * spec_rate_hz));
  }
  /// Frequency in Hz of extracted spectrogram bin b.
  double bin_frequency(std::size_t b) const {
    return static_cast<double>(first_bin + b) * spec_rate_hz / static_cast<double>(n_fft);
  }

  void validate(double ppg_rate) const {
    if (!(window_s > 0.0 && shift_s > 0.0)) throw ConfigError("window and shift must be > 0");
    if (!(sub_window_s > 0.0 && sub_window_s <= window_s && sub_shift_s > 0.0))
      throw ConfigError("sub-window must fit within the window");
    if (!(bp_lo_hz > 0.0 && bp_lo_hz < bp_hi_hz && bp_hi_hz < ppg_rate / 2.0)) {
      throw ConfigError("band-pass corners " + std::to_string(bp_lo_hz) + "-" + std::to_string(bp_hi_hz) +
                        " Hz violate Nyquist for PPG rate " + std::to_string(ppg_rate) + " Hz");
    }
    if (first_bin + spec_bins > n_fft) throw ConfigError("spectrogram bins exceed FFT size");
    if (sub_length() > n_fft) throw ConfigError("sub-window longer than FFT size");
  }
};

/// One analysis window.
struct SignalWindow {
  double start_time = 0.0;
  std::vector<double> time_domain;
  std::size_t sub_windows = 0;
  std::size_t bins = 0;
  std::vector<double> spectrogram;  // sub_windows x bins x 2, row-major

  double& spec(std::size_t s, std::size_t b, std::size_t ch) { return spectrogram[(s * bins + b) * 2 + ch]; }
  double spec(std::size_t s, std::size_t b, std::size_t ch) const {
    return spectrogram[(s * bins + b) * 2 + ch];
  }
};

inline std::size_t window_count(double duration, const FrontendConfig& cfg) {
  if (duration + 1e-9 < cfg.window_s) return 0;
  return static_cast<std::size_t>(std::floor((duration - cfg.window_s) / cfg.shift_s + 1e-9)) + 1;
}

/// Builds windows incrementally so callers can stream long sessions.
class WindowBuilder {
 public:
  WindowBuilder(const RawSession& session, FrontendConfig cfg)
      : session_(session), cfg_(cfg), dft_(cfg.n_fft, cfg.first_bin, cfg.spec_bins) {
    session.validate();
    cfg_.validate(session.ppg_rate);
    if (session.duration() + 1e-9 < cfg_.window_s) {
      throw InsufficientDataError("session " + session.id + " lasts " + std::to_string(session.duration()) +
                                  " s, shorter than the " + std::to_string(cfg_.window_s) + " s window");
    }
    const auto filter = dsp::butterworth_bandpass(session.ppg_rate, cfg_.bp_lo_hz, cfg_.bp_hi_hz, cfg_.bp_order);
    for (const auto* c : session.of_kind(ChannelKind::kPpg)) filtered_ppg_.push_back(filter.apply(c->samples));
    for (const auto* c : session.of_kind(ChannelKind::kAccel)) accel_.push_back(&c->samples);
    count_ = window_count(session.duration(), cfg_);
  }

  std::size_t size() const noexcept { return count_; }
  const FrontendConfig& config() const noexcept { return cfg_; }

  SignalWindow window(std::size_t k) const {
    SignalWindow w;
    const double offset = static_cast<double>(k) * cfg_.shift_s;
    w.start_time = session_.start_time + offset;
    w.sub_windows = cfg_.sub_windows();
    w.bins = cfg_.spec_bins;
    w.spectrogram.assign(w.sub_windows * w.bins * 2, 0.0);

    const double fs = session_.ppg_rate;
    const auto n_win = static_cast<std::size_t>(std::llround(cfg_.window_s * fs));
    const auto begin = static_cast<std::size_t>(std::llround(offset * fs));

    // Time domain: z-score each filtered channel, average, resample.
    std::vector<double> avg(n_win, 0.0);
    for (const auto& ch : filtered_ppg_) {
      const auto z = dsp::zscore(slice(ch, begin, n_win));
      for (std::size_t i = 0; i < n_win; ++i) avg[i] += z[i];
    }
    for (double& v : avg) v /= static_cast<double>(filtered_ppg_.size());
    w.time_domain = dsp::resample(avg, fs, cfg_.time_rate_hz, cfg_.time_length());

    std::vector<const std::vector<double>*> ppg;
    for (const auto& ch : filtered_ppg_) ppg.push_back(&ch);
    add_spectra(w, ppg, fs, offset, 0);
    if (!accel_.empty()) add_spectra(w, accel_, session_.acc_rate, offset, 1);
    return w;
  }

 private:
  // Samples [begin, begin + n); positions past the end repeat the last sample.
  static std::vector<double> slice(const std::vector<double>& x, std::size_t begin, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[std::min(begin + i, x.size() - 1)];
    return out;
  }

  void add_spectra(SignalWindow& w, const std::vector<const std::vector<double>*>& chans, double fs, double offset,
                   std::size_t ch) const {
    const auto n_sub = static_cast<std::size_t>(std::llround(cfg_.sub_window_s * fs));
    std::vector<double> mags(cfg_.spec_bins);
    for (std::size_t s = 0; s < w.sub_windows; ++s) {
      const double t = offset + static_cast<double>(s) * cfg_.sub_shift_s;
      const auto begin = static_cast<std::size_t>(std::llround(t * fs));
      for (const auto* x : chans) {
        const auto z = dsp::zscore(slice(*x, begin, n_sub));
        const auto r = dsp::resample(z, fs, cfg_.spec_rate_hz, cfg_.sub_length());
        dft_.magnitudes(r, mags);
        for (std::size_t b = 0; b < cfg_.spec_bins; ++b) w.spec(s, b, ch) += mags[b];
      }
      for (std::size_t b = 0; b < cfg_.spec_bins; ++b) w.spec(s, b, ch) /= static_cast<double>(chans.size());
    }
  }

  const RawSession& session_;
  FrontendConfig cfg_;
  dsp::BandDft dft_;
  std::vector<std::vector<double>> filtered_ppg_;
  std::vector<const std::vector<double>*> accel_;
  std::size_t count_ = 0;
};

inline std::vector<SignalWindow> make_windows(const RawSession& session, const FrontendConfig& cfg = {}) {
  WindowBuilder builder(session, cfg);
  std::vector<SignalWindow> out;
  out.reserve(builder.size());
  for (std::size_t k = 0; k < builder.size(); ++k) out.push_back(builder.window(k));
  return out;
}

}  // namespace beliefhr
