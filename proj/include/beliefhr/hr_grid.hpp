#pragma once

// Quantized heart-rate state space and discrete distributions over it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beliefhr/errors.hpp"

namespace beliefhr {

inline constexpr double kDistributionTolerance = 1e-9;

/// c half-open bins of equal width partitioning [y_min, y_max) in BPM.
class HrGrid {
 public:
  HrGrid(std::size_t bin_count = 64, double y_min = 30.0, double y_max = 210.0)
      : bin_count_(bin_count), y_min_(y_min), y_max_(y_max) {
    if (bin_count < 2) throw ParameterError("HrGrid: bin_count must be >= 2");
    if (!(y_min < y_max) || !std::isfinite(y_min) || !std::isfinite(y_max))
      throw ParameterError("HrGrid: require finite y_min < y_max");
    bin_width_ = (y_max - y_min) / static_cast<double>(bin_count);
  }

  std::size_t bin_count() const noexcept { return bin_count_; }
  double y_min() const noexcept { return y_min_; }
  double y_max() const noexcept { return y_max_; }
  double bin_width() const noexcept { return bin_width_; }

  double lower(std::size_t i) const noexcept {
    return y_min_ + static_cast<double>(i) * bin_width_;
  }
  double upper(std::size_t i) const noexcept { return lower(i) + bin_width_; }
  double center(std::size_t i) const noexcept { return lower(i) + 0.5 * bin_width_; }

  std::vector<double> centers() const {
    std::vector<double> out(bin_count_);
    for (std::size_t i = 0; i < bin_count_; ++i) out[i] = center(i);
    return out;
  }

  bool contains(double bpm) const noexcept { return bpm >= y_min_ && bpm < y_max_; }

  friend bool operator==(const HrGrid&, const HrGrid&) = default;

 private:
  std::size_t bin_count_;
  double y_min_;
  double y_max_;
  double bin_width_ = 0.0;
};

inline std::string describe(const HrGrid& g) {
  return "bins=" + std::to_string(g.bin_count()) + " range=[" + std::to_string(g.y_min()) +
         ", " + std::to_string(g.y_max()) + ")";
}

/// Index of the half-open bin containing `bpm`; boundary values go to the upper bin.
inline std::size_t bin_index(const HrGrid& grid, double bpm) {
  if (!grid.contains(bpm)) {
    throw RangeError("heart rate " + std::to_string(bpm) + " BPM outside grid range [" +
                     std::to_string(grid.y_min()) + ", " + std::to_string(grid.y_max()) + ")");
  }
  auto i = static_cast<std::size_t>(std::floor((bpm - grid.y_min()) / grid.bin_width()));
  i = std::min(i, grid.bin_count() - 1);
  // floor() of the rounded quotient can land one bin off at exact boundaries.
  if (bpm < grid.lower(i) && i > 0) --i;
  if (bpm >= grid.upper(i) && i + 1 < grid.bin_count()) ++i;
  return i;
}

/// Normalized probability vector over the bins of an HrGrid.
class BinDistribution {
 public:
  /// Validates non-negativity and unit sum (within 1e-9).
  BinDistribution(HrGrid grid, std::vector<double> probs)
      : grid_(std::move(grid)), probs_(std::move(probs)) {
    if (probs_.size() != grid_.bin_count()) {
      throw ValidationError("distribution has " + std::to_string(probs_.size()) +
                            " entries, grid has " + std::to_string(grid_.bin_count()) + " bins");
    }
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw ValidationError("distribution entry is negative or non-finite");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kDistributionTolerance)
      throw ValidationError("distribution sums to " + std::to_string(sum) + ", expected 1");
  }

  /// Scales non-negative weights to unit sum.
  static BinDistribution normalized(HrGrid grid, std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ValidationError("weights must be finite and non-negative");
      sum += w;
    }
    if (!(sum > 0.0)) throw ValidationError("weights have zero total mass");
    for (double& w : weights) w /= sum;
    return BinDistribution(std::move(grid), std::move(weights));
  }

  static BinDistribution uniform(HrGrid grid) {
    const std::size_t c = grid.bin_count();
    return BinDistribution(std::move(grid), std::vector<double>(c, 1.0 / static_cast<double>(c)));
  }

  static BinDistribution one_hot(HrGrid grid, std::size_t bin) {
    if (bin >= grid.bin_count()) throw RangeError("one_hot: bin index out of range");
    std::vector<double> p(grid.bin_count(), 0.0);
    p[bin] = 1.0;
    return BinDistribution(std::move(grid), std::move(p));
  }

  const HrGrid& grid() const noexcept { return grid_; }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::size_t size() const noexcept { return probs_.size(); }

  /// Most probable bin; ties resolve to the lowest index.
  std::size_t mode() const noexcept {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) -
                                    probs_.begin());
  }

 private:
  HrGrid grid_;
  std::vector<double> probs_;
};

/// Discretized Gaussian label: N(y, sigma_y^2) evaluated at bin centers, renormalized.
inline BinDistribution gaussian_label(const HrGrid& grid, double y, double sigma_y) {
  if (!(sigma_y > 0.0)) throw ParameterError("gaussian_label: sigma_y must be > 0");
  bin_index(grid, y);  // range check
  std::vector<double> w(grid.bin_count());
  // Work relative to the peak so tiny sigma does not underflow everything.
  double max_log = -INFINITY;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double z = (grid.center(i) - y) / sigma_y;
    w[i] = -0.5 * z * z;
    max_log = std::max(max_log, w[i]);
  }
  for (double& v : w) v = std::exp(v - max_log);
  return BinDistribution::normalized(grid, std::move(w));
}

struct DistStats {
  double mean = 0.0;     // BPM
  double entropy = 0.0;  // nats
  double std = 0.0;      // BPM
};

inline DistStats dist_stats(const BinDistribution& d) {
  const HrGrid& g = d.grid();
  DistStats s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double p = d[i];
    s.mean += g.center(i) * p;
    if (p > 0.0) s.entropy -= p * std::log(p);
  }
  double var = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dev = g.center(i) - s.mean;
    var += d[i] * dev * dev;
  }
  s.std = std::sqrt(var);
  return s;
}

/// Linear interpolation of bin values onto a finer grid of m bins over the same range.
inline BinDistribution upsample(const BinDistribution& d, std::size_t m) {
  const HrGrid& coarse = d.grid();
  const std::size_t c = coarse.bin_count();
  if (m < c) {
    throw ParameterError("upsample: target bins " + std::to_string(m) + " < source bins " +
                         std::to_string(c));
  }
  HrGrid fine(m, coarse.y_min(), coarse.y_max());
  std::vector<double> w(m);
  for (std::size_t k = 0; k < m; ++k) {
    // Position of the fine center in units of coarse bins, measured from center 0.
    const double x = (fine.center(k) - coarse.center(0)) / coarse.bin_width();
    double v;
    if (x <= 0.0) {
      v = d[0];
    } else if (x >= static_cast<double>(c - 1)) {
      v = d[c - 1];
    } else {
      const auto i = static_cast<std::size_t>(std::floor(x));
      const double frac = x - static_cast<double>(i);
      v = (1.0 - frac) * d[i] + frac * d[std::min(i + 1, c - 1)];
    }
    w[k] = std::max(0.0, v);
  }
  return BinDistribution::normalized(std::move(fine), std::move(w));
}

/// Elementwise product of two distributions on the same grid, unnormalized.
inline std::vector<double> product(const BinDistribution& a, const BinDistribution& b) {
  if (!(a.grid() == b.grid())) throw ConfigError("distributions are defined on different grids");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace beliefhr
