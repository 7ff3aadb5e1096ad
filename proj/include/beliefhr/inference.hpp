#pragma once

// Online sum-product filtering and offline max-product (Viterbi) decoding over
// the HR grid.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "beliefhr/errors.hpp"
#include "beliefhr/hr_grid.hpp"
#include "beliefhr/transition.hpp"

namespace beliefhr {

inline constexpr double kCollapseThreshold = 1e-300;

enum class CollapsePolicy { kError, kResetUniform };

struct StepResult {
  BinDistribution posterior;
  double normalizer;  // Z_t
};

namespace detail {

inline void require_same_grid(const HrGrid& a, const HrGrid& b, const char* what) {
  if (!(a == b)) throw ConfigError(std::string(what) + ": grid mismatch (" + describe(a) + " vs " + describe(b) + ")");
}

inline std::vector<double> predict(const BinDistribution& prior, const TransitionMatrix& t) {
  const std::size_t c = prior.size();
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    const double p = prior[i];
    if (p == 0.0) continue;
    const auto row = t.row(i);
    for (std::size_t j = 0; j < c; ++j) out[j] += p * row[j];
  }
  return out;
}

}  // namespace detail

/// One belief-propagation step; throws BeliefCollapseError(timestep) when Z <= 1e-300.
inline StepResult forward_step(const BinDistribution& prior, const TransitionModel& transition,
                               const BinDistribution& emission, std::size_t timestep = 0) {
  detail::require_same_grid(prior.grid(), transition.grid(), "forward_step");
  detail::require_same_grid(prior.grid(), emission.grid(), "forward_step");
  std::vector<double> unnorm = detail::predict(prior, transition.matrix());
  double z = 0.0;
  for (std::size_t j = 0; j < unnorm.size(); ++j) {
    unnorm[j] *= emission[j];
    z += unnorm[j];
  }
  if (!(z > kCollapseThreshold)) throw BeliefCollapseError(timestep);
  for (double& v : unnorm) v /= z;
  return {BinDistribution::normalized(prior.grid(), std::move(unnorm)), z};
}

struct BeliefStep {
  BinDistribution posterior;
  double normalizer;
  DistStats stats;
  bool reset = false;  // belief was reset to uniform after a collapse
};

/// Streaming filter: holds only the current belief.
class OnlineFilter {
 public:
  OnlineFilter(const TransitionModel& transition, BinDistribution init,
               CollapsePolicy policy = CollapsePolicy::kError)
      : transition_(transition), init_(std::move(init)), belief_(init_), policy_(policy) {
    detail::require_same_grid(init_.grid(), transition.grid(), "filter");
  }

  /// Incorporates the next emission. The first call combines it with the
  /// initial belief directly, later calls propagate through the transition.
  BeliefStep update(const BinDistribution& emission) {
    const std::size_t t = steps_++;
    bool reset = false;
    StepResult r = [&]() -> StepResult {
      try {
        return t == 0 ? first(emission, t) : forward_step(belief_, transition_, emission, t);
      } catch (const BeliefCollapseError&) {
        if (policy_ == CollapsePolicy::kError) throw;
        // Restart from a uniform belief; the posterior is then the emission itself.
        reset = true;
        return {emission, 1.0 / static_cast<double>(emission.size())};
      }
    }();
    belief_ = r.posterior;
    return {std::move(r.posterior), r.normalizer, dist_stats(belief_), reset};
  }

  const BinDistribution& belief() const noexcept { return belief_; }
  std::size_t steps() const noexcept { return steps_; }

 private:
  StepResult first(const BinDistribution& emission, std::size_t t) const {
    detail::require_same_grid(init_.grid(), emission.grid(), "filter");
    std::vector<double> w = product(init_, emission);
    double z = 0.0;
    for (double v : w) z += v;
    if (!(z > kCollapseThreshold)) throw BeliefCollapseError(t);
    for (double& v : w) v /= z;
    return {BinDistribution::normalized(init_.grid(), std::move(w)), z};
  }

  const TransitionModel& transition_;
  BinDistribution init_;
  BinDistribution belief_;
  CollapsePolicy policy_;
  std::size_t steps_ = 0;
};

struct BeliefTrace {
  HrGrid grid;
  double t0 = 0.0;
  double dt = 2.0;
  std::vector<BeliefStep> steps;

  std::vector<double> means() const {
    std::vector<double> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.stats.mean);
    return out;
  }
  std::vector<BinDistribution> posteriors() const {
    std::vector<BinDistribution> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.posterior);
    return out;
  }
};

inline BeliefTrace filter(std::span<const BinDistribution> emissions, const TransitionModel& transition,
                          const BinDistribution& init, double t0 = 0.0, double dt = 2.0,
                          CollapsePolicy policy = CollapsePolicy::kError) {
  if (emissions.empty()) throw InsufficientDataError("filter: empty emission series");
  OnlineFilter f(transition, init, policy);
  BeliefTrace trace{init.grid(), t0, dt, {}};
  trace.steps.reserve(emissions.size());
  for (const auto& e : emissions) trace.steps.push_back(f.update(e));
  return trace;
}

struct ViterbiPath {
  std::vector<std::size_t> bins;
  std::vector<double> bpm;
  double log_probability = 0.0;
};

/// Most probable bin sequence, computed in log space. Ties go to the lowest bin index.
inline ViterbiPath viterbi(std::span<const BinDistribution> emissions, const TransitionModel& transition,
                           const BinDistribution& init) {
  if (emissions.empty()) throw InsufficientDataError("viterbi: empty emission series");
  const HrGrid& grid = init.grid();
  detail::require_same_grid(grid, transition.grid(), "viterbi");
  const std::size_t c = grid.bin_count();
  const std::size_t n = emissions.size();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  auto safe_log = [](double v) { return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity(); };

  std::vector<double> log_t(c * c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) log_t[i * c + j] = safe_log(transition.matrix()(i, j));

  std::vector<double> score(c), next(c);
  std::vector<std::uint32_t> back(n * c, 0);

  auto check_step = [&](const std::vector<double>& s, std::size_t t) {
    for (double v : s)
      if (v > kNegInf) return;
    throw DecodeFailureError(t);
  };

  detail::require_same_grid(grid, emissions[0].grid(), "viterbi");
  for (std::size_t j = 0; j < c; ++j) score[j] = safe_log(init[j]) + safe_log(emissions[0][j]);
  check_step(score, 0);

  for (std::size_t t = 1; t < n; ++t) {
    detail::require_same_grid(grid, emissions[t].grid(), "viterbi");
    for (std::size_t j = 0; j < c; ++j) {
      double best = kNegInf;
      std::uint32_t arg = 0;
      for (std::size_t i = 0; i < c; ++i) {
        const double v = score[i] + log_t[i * c + j];
        if (v > best) {
          best = v;
          arg = static_cast<std::uint32_t>(i);
        }
      }
      next[j] = best + safe_log(emissions[t][j]);
      back[t * c + j] = arg;
    }
    score.swap(next);
    check_step(score, t);
  }

  std::size_t last = 0;
  for (std::size_t j = 1; j < c; ++j)
    if (score[j] > score[last]) last = j;

  ViterbiPath path;
  path.log_probability = score[last];
  path.bins.resize(n);
  path.bins[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) path.bins[t - 1] = back[t * c + path.bins[t]];
  path.bpm.reserve(n);
  for (std::size_t b : path.bins) path.bpm.push_back(grid.center(b));
  return path;
}

}  // namespace beliefhr
