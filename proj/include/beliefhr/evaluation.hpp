#pragma once

// Accuracy and uncertainty metrics over prediction records and posteriors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefhr/errors.hpp"
#include "beliefhr/hr_grid.hpp"

namespace beliefhr {

struct PredictionRecord {
  double time = 0.0;
  double predicted = 0.0;  // BPM
  double truth = 0.0;      // BPM
  double entropy = 0.0;    // nats
  double std = 0.0;        // BPM
  std::string session;
  std::optional<std::string> tag;

  double abs_error() const { return std::abs(predicted - truth); }
};

inline double mean_absolute_error(std::span<const PredictionRecord> records) {
  if (records.empty()) throw ParameterError("MAE of an empty record set");
  double s = 0.0;
  for (const auto& r : records) s += r.abs_error();
  return s / static_cast<double>(records.size());
}

struct SessionMae {
  std::map<std::string, double> per_session;  // ordered by session id
  double mean = 0.0;
  double std = 0.0;  // sample std across sessions; 0 for a single session
};

inline SessionMae mae_by_session(std::span<const PredictionRecord> records) {
  if (records.empty()) throw ParameterError("mae_by_session: no records");
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    auto& [sum, n] = acc[r.session];
    sum += r.abs_error();
    ++n;
  }
  SessionMae out;
  for (const auto& [id, sn] : acc) out.per_session[id] = sn.first / static_cast<double>(sn.second);
  const double k = static_cast<double>(out.per_session.size());
  for (const auto& [id, m] : out.per_session) out.mean += m;
  out.mean /= k;
  if (out.per_session.size() > 1) {
    double var = 0.0;
    for (const auto& [id, m] : out.per_session) var += (m - out.mean) * (m - out.mean);
    out.std = std::sqrt(var / (k - 1.0));
  }
  return out;
}

inline constexpr double kNllFloor = 1e-12;

/// Mean of -ln p_t[bin(truth_t)], probabilities floored at 1e-12.
inline double nll(std::span<const BinDistribution> posteriors, std::span<const double> truths) {
  if (posteriors.size() != truths.size()) throw ParameterError("nll: posterior and truth counts differ");
  if (posteriors.empty()) throw ParameterError("nll: empty input");
  std::vector<std::string> offenders;
  for (std::size_t t = 0; t < truths.size(); ++t) {
    if (!posteriors[t].grid().contains(truths[t]))
      offenders.push_back("#" + std::to_string(t) + "=" + std::to_string(truths[t]));
  }
  if (!offenders.empty()) {
    std::string msg = "nll: ground truth outside grid range:";
    for (std::size_t i = 0; i < offenders.size() && i < 20; ++i) msg += " " + offenders[i];
    if (offenders.size() > 20) msg += " ... (" + std::to_string(offenders.size()) + " total)";
    throw RangeError(msg);
  }
  double s = 0.0;
  for (std::size_t t = 0; t < truths.size(); ++t) {
    const double p = posteriors[t][bin_index(posteriors[t].grid(), truths[t])];
    s -= std::log(std::max(p, kNllFloor));
  }
  return s / static_cast<double>(truths.size());
}

struct CalibrationPoint {
  double confidence;
  double coverage;
};

/// Confidence levels 0.05, 0.10, ..., 1.00.
inline std::vector<double> default_confidence_levels() {
  std::vector<double> q;
  for (int k = 1; k <= 20; ++k) q.push_back(0.05 * k);
  return q;
}

/// Cumulative mass of all bins ranked strictly ahead of `bin` when bins are
/// sorted by descending probability (ties by ascending index).
inline double mass_ranked_before(const BinDistribution& d, std::size_t bin) {
  const double p = d[bin];
  double m = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > p || (d[i] == p && i < bin)) m += d[i];
  }
  return m;
}

/// Coverage of the truth by the smallest highest-probability region of mass >= q.
inline std::vector<CalibrationPoint> calibration_curve(std::span<const BinDistribution> posteriors,
                                                       std::span<const double> truths,
                                                       std::size_t upsample_to = 1000,
                                                       std::span<const double> levels = {}) {
  if (posteriors.size() != truths.size()) throw ParameterError("calibration_curve: posterior and truth counts differ");
  if (posteriors.empty()) throw ParameterError("calibration_curve: empty input");
  const std::vector<double> default_levels = default_confidence_levels();
  if (levels.empty()) levels = default_levels;
  constexpr double kSlack = 1e-12;

  std::vector<std::size_t> hits(levels.size(), 0);
  for (std::size_t t = 0; t < truths.size(); ++t) {
    const BinDistribution fine = upsample(posteriors[t], std::max(upsample_to, posteriors[t].size()));
    const double before = mass_ranked_before(fine, bin_index(fine.grid(), truths[t]));
    // The truth bin is inside the region for level q iff the prefix ahead of it
    // has not yet reached q.
    for (std::size_t k = 0; k < levels.size(); ++k)
      if (before < levels[k] - kSlack) ++hits[k];
  }
  std::vector<CalibrationPoint> curve;
  for (std::size_t k = 0; k < levels.size(); ++k)
    curve.push_back({levels[k], static_cast<double>(hits[k]) / static_cast<double>(truths.size())});
  return curve;
}

enum class UncertaintyMetric { kEntropy, kStd };

struct RejectionPoint {
  double retained_fraction;
  std::size_t retained;
  double mae;
};

/// MAE after dropping the ceil((1-f) N) most uncertain records; among equal
/// uncertainties the earlier record is dropped first.
inline std::vector<RejectionPoint> rejection_sweep(std::span<const PredictionRecord> records,
                                                   UncertaintyMetric metric, std::span<const double> fractions) {
  if (records.empty()) throw ParameterError("rejection_sweep: no records");
  const std::size_t n = records.size();
  auto u = [&](std::size_t i) { return metric == UncertaintyMetric::kEntropy ? records[i].entropy : records[i].std; };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u(a) > u(b); });

  std::vector<RejectionPoint> out;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ParameterError("rejection_sweep: fraction " + std::to_string(f) + " not in (0, 1]");
    const auto drop = static_cast<std::size_t>(std::ceil((1.0 - f) * static_cast<double>(n) - 1e-9));
    if (drop >= n) throw ParameterError("rejection_sweep: fraction " + std::to_string(f) + " retains no records");
    // Sum in record order so that f = 1 reproduces mean_absolute_error bit for bit.
    std::vector<bool> dropped(n, false);
    for (std::size_t k = 0; k < drop; ++k) dropped[order[k]] = true;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!dropped[i]) s += records[i].abs_error();
    out.push_back({f, n - drop, s / static_cast<double>(n - drop)});
  }
  return out;
}

/// Mean |pred - truth| / truth per activity tag.
inline std::map<std::string, double> grouped_mape(std::span<const PredictionRecord> records) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (!r.tag) throw ParameterError("grouped_mape: record at t=" + std::to_string(r.time) + " has no tag");
    if (r.truth == 0.0) throw DomainError("grouped_mape: ground truth of 0 BPM");
    auto& [sum, n] = acc[*r.tag];
    sum += std::abs(r.predicted - r.truth) / std::abs(r.truth);
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [tag, sn] : acc) out[tag] = sn.first / static_cast<double>(sn.second);
  return out;
}

}  // namespace beliefhr
