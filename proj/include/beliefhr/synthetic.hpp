#pragma once

// Synthetic heart-rate trajectories and PPG/accelerometer recordings with
// optional motion artifacts, for end-to-end checks without real datasets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "beliefhr/errors.hpp"
#include "beliefhr/frontend.hpp"

namespace beliefhr::synth {

using Rng = std::mt19937_64;

struct WalkConfig {
  double mu = 0.0;
  double sigma = 0.01;
  double y_min = 30.0;  // walk is clamped to [y_min + 2, y_max - 2]
  double y_max = 210.0;
};

/// Multiplicative random walk y_{t+1} = clamp(y_t * exp(eps_t)), eps_t ~ N(mu, sigma^2),
/// starting uniformly in [60, 100] BPM.
inline std::vector<double> hr_walk(const WalkConfig& cfg, std::size_t steps, Rng& rng) {
  if (!(cfg.sigma >= 0.0)) throw ParameterError("hr_walk: sigma must be >= 0");
  std::vector<double> y;
  if (steps == 0) return y;
  y.reserve(steps);
  std::uniform_real_distribution<double> start(60.0, 100.0);
  std::normal_distribution<double> step(0.0, 1.0);
  const double lo = cfg.y_min + 2.0, hi = cfg.y_max - 2.0;
  y.push_back(start(rng));
  for (std::size_t t = 1; t < steps; ++t) {
    const double eps = cfg.mu + cfg.sigma * step(rng);
    y.push_back(std::clamp(y.back() * std::exp(eps), lo, hi));
  }
  return y;
}

inline std::vector<double> hr_walk(double mu, double sigma, std::size_t steps, std::uint64_t seed) {
  Rng rng(seed);
  return hr_walk(WalkConfig{mu, sigma}, steps, rng);
}

struct ArtifactConfig {
  double fraction = 0.0;        // share of the recording covered by artifacts
  double offset_bpm = 30.0;     // artifact frequency = HR + offset
  double amplitude = 2.0;
  bool mirror_to_accel = false;
  double block_s = 10.0;        // artifacts switch on/off in blocks of this length
};

struct SessionConfig {
  double duration_s = 600.0;
  double label_dt = 2.0;
  double ppg_rate = 64.0;
  double acc_rate = 32.0;
  std::size_t ppg_channels = 1;
  std::size_t acc_channels = 3;
  std::vector<double> harmonics{1.0, 0.4, 0.2};
  double noise_std = 0.2;
  double accel_noise_std = 0.05;
  ArtifactConfig artifact;

  void validate() const {
    if (!(duration_s > 20.0)) throw ParameterError("synth: duration must exceed 20 s");
    if (!(label_dt > 0.0 && ppg_rate > 0.0 && acc_rate > 0.0)) throw ParameterError("synth: rates must be > 0");
    if (ppg_channels == 0) throw ParameterError("synth: need at least one PPG channel");
    if (!(artifact.fraction >= 0.0 && artifact.fraction <= 1.0))
      throw ParameterError("synth: artifact fraction must lie in [0, 1]");
    if (!(artifact.amplitude >= 0.0 && noise_std >= 0.0 && accel_noise_std >= 0.0))
      throw ParameterError("synth: amplitudes must be >= 0");
    for (double a : harmonics)
      if (!(a >= 0.0)) throw ParameterError("synth: harmonic amplitudes must be >= 0");
    if (!(artifact.block_s > 0.0)) throw ParameterError("synth: artifact block length must be > 0");
  }

  /// Number of label points needed to cover the recording.
  std::size_t label_count() const {
    return static_cast<std::size_t>(std::ceil(duration_s / label_dt - 1e-9)) + 1;
  }
};

/// Piecewise-linear HR through (k * dt, hr[k]).
class HrTrack {
 public:
  HrTrack(std::vector<double> hr, double dt) : hr_(std::move(hr)), dt_(dt) {
    if (hr_.empty()) throw ParameterError("synth: empty heart-rate series");
  }
  double at(double t) const {
    if (t <= 0.0) return hr_.front();
    const double x = t / dt_;
    const auto k = static_cast<std::size_t>(x);
    if (k + 1 >= hr_.size()) return hr_.back();
    const double f = x - static_cast<double>(k);
    return (1.0 - f) * hr_[k] + f * hr_[k + 1];
  }

 private:
  std::vector<double> hr_;
  double dt_;
};

/// Cycles elapsed by time t_k = k / fs for a frequency track; trapezoidal sums
/// of a piecewise-linear rate are exact at the sample grid when labels fall on it.
inline std::vector<double> integrate_cycles(const HrTrack& hr, double offset_bpm, double fs, std::size_t n) {
  std::vector<double> cycles(n, 0.0);
  double prev = (hr.at(0.0) + offset_bpm) / 60.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double f = (hr.at(static_cast<double>(k) / fs) + offset_bpm) / 60.0;
    cycles[k] = cycles[k - 1] + 0.5 * (prev + f) / fs;
    prev = f;
  }
  return cycles;
}

/// Boolean mask per artifact block, with round(fraction * blocks) blocks set.
inline std::vector<bool> artifact_blocks(const SessionConfig& cfg, Rng& rng) {
  const auto blocks = static_cast<std::size_t>(std::ceil(cfg.duration_s / cfg.artifact.block_s - 1e-9));
  std::vector<std::size_t> idx(blocks);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto on = static_cast<std::size_t>(std::llround(cfg.artifact.fraction * static_cast<double>(blocks)));
  std::vector<bool> mask(blocks, false);
  for (std::size_t i = 0; i < on && i < blocks; ++i) mask[idx[i]] = true;
  return mask;
}

inline RawSession make_session(const std::vector<double>& hr, const SessionConfig& cfg, Rng& rng,
                               std::string id = "synthetic") {
  cfg.validate();
  const HrTrack track(hr, cfg.label_dt);
  const std::vector<bool> blocks = artifact_blocks(cfg, rng);
  auto artifact_on = [&](double t) {
    const auto b = static_cast<std::size_t>(t / cfg.artifact.block_s);
    return b < blocks.size() && blocks[b];
  };
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::normal_distribution<double> gauss(0.0, 1.0);

  RawSession s;
  s.id = std::move(id);
  s.ppg_rate = cfg.ppg_rate;
  s.acc_rate = cfg.acc_rate;

  const auto n_ppg = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.ppg_rate));
  const auto pulse = integrate_cycles(track, 0.0, cfg.ppg_rate, n_ppg);
  const auto motion = integrate_cycles(track, cfg.artifact.offset_bpm, cfg.ppg_rate, n_ppg);
  for (std::size_t c = 0; c < cfg.ppg_channels; ++c) {
    Channel ch{"ppg" + std::to_string(c), ChannelKind::kPpg, std::vector<double>(n_ppg)};
    for (std::size_t k = 0; k < n_ppg; ++k) {
      const double t = static_cast<double>(k) / cfg.ppg_rate;
      double v = 0.0;
      for (std::size_t h = 0; h < cfg.harmonics.size(); ++h)
        v += cfg.harmonics[h] * std::sin(kTwoPi * static_cast<double>(h + 1) * pulse[k]);
      if (artifact_on(t)) v += cfg.artifact.amplitude * std::sin(kTwoPi * motion[k]);
      v += cfg.noise_std * gauss(rng);
      ch.samples[k] = v;
    }
    s.channels.push_back(std::move(ch));
  }

  const auto n_acc = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.acc_rate));
  const auto motion_acc = integrate_cycles(track, cfg.artifact.offset_bpm, cfg.acc_rate, n_acc);
  const char* axes[] = {"acc_x", "acc_y", "acc_z"};
  for (std::size_t c = 0; c < cfg.acc_channels; ++c) {
    Channel ch{c < 3 ? axes[c] : "acc" + std::to_string(c), ChannelKind::kAccel, std::vector<double>(n_acc)};
    for (std::size_t k = 0; k < n_acc; ++k) {
      const double t = static_cast<double>(k) / cfg.acc_rate;
      double v = cfg.accel_noise_std * gauss(rng);
      if (cfg.artifact.mirror_to_accel && artifact_on(t)) v += cfg.artifact.amplitude * std::sin(kTwoPi * motion_acc[k]);
      ch.samples[k] = v;
    }
    s.channels.push_back(std::move(ch));
  }

  for (std::size_t k = 0; k < hr.size(); ++k) {
    const double t = static_cast<double>(k) * cfg.label_dt;
    if (t > cfg.duration_s + 1e-9) break;
    s.labels.push_back({t, hr[k], artifact_on(t) ? "artifact" : "clean"});
  }
  return s;
}

/// Walk plus session from one generator.
inline RawSession generate(const WalkConfig& walk, const SessionConfig& cfg, std::uint64_t seed,
                           std::string id = "synthetic") {
  Rng rng(seed);
  const auto hr = hr_walk(walk, cfg.label_count(), rng);
  return make_session(hr, cfg, rng, std::move(id));
}

}  // namespace beliefhr::synth
