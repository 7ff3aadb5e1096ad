// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "beliefhr/beliefhr.hpp"
#include "oracles.hpp"
#include "suite.hpp"

using namespace beliefhr;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void check(const char* name, double time_limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_limit_s > 0.0 && secs >= time_limit_s) {
    o.pass = false;
    o.detail += " (over time limit)";
  }
  failures += o.pass ? 0 : 1;
  std::printf("%s  %-28s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome quantization_error() {
  const HrGrid grid;
  double total = 0.0, worst = 0.0;
  int n = 0;
  for (int k = 0; k <= 1600; ++k) {
    const double y = 40.0 + 0.1 * k;
    const double err = std::abs(y - dist_stats(gaussian_label(grid, y, 1.5)).mean);
    total += err;
    worst = std::max(worst, err);
    ++n;
  }
  const double mean = total / n;
  return {mean >= 0.01 && mean <= 0.03 && worst <= 0.05, fmt("mean %.4f BPM, max %.4f BPM", mean, worst)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> cs(3, 6), ts(2, 6);
  double worst = 0.0;
  int path_mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = cs(rng), len = ts(rng);
    const HrGrid g(c, 30, 210);
    const auto init = oracle::random_distribution(c, rng);
    oracle::Matrix trans, emis;
    TransitionMatrix m(c);
    for (std::size_t i = 0; i < c; ++i) {
      trans.push_back(oracle::random_distribution(c, rng));
      for (std::size_t j = 0; j < c; ++j) m(i, j) = trans[i][j];
    }
    std::vector<BinDistribution> emissions;
    for (std::size_t t = 0; t < len; ++t) {
      emis.push_back(oracle::random_distribution(c, rng));
      emissions.emplace_back(g, emis.back());
    }
    const auto model = TransitionModel::from_matrix(g, 0.0, 0.01, m);
    const BinDistribution prior(g, init);
    const auto trace = filter(emissions, model, prior);
    const auto expected = oracle::brute_force_filter(init, trans, emis);
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t i = 0; i < c; ++i) worst = std::max(worst, std::abs(trace.steps[t].posterior[i] - expected[t][i]));
    if (viterbi(emissions, model, prior).bins != oracle::brute_force_best_path(init, trans, emis)) ++path_mismatches;
  }
  return {worst <= 1e-10 && path_mismatches == 0,
          fmt("max filter deviation %.2e, Viterbi mismatches %.0f / 200", worst, path_mismatches)};
}

Outcome transition_validity() {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> mu(-0.05, 0.05), log_sigma(std::log(1e-4), std::log(0.5));
  std::uniform_int_distribution<std::size_t> bins(2, 128);
  double worst_row = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const HrGrid g(bins(rng), 30, 210);
    const auto m = discretize_transition(mu(rng), std::exp(log_sigma(rng)), g);
    for (std::size_t i = 0; i < g.bin_count(); ++i) {
      double s = 0.0;
      for (double v : m.row(i)) s += v;
      worst_row = std::max(worst_row, std::abs(s - 1.0));
    }
  }
  const HrGrid g3(3, 30, 210);
  double worst_quad = 0.0;
  for (double sigma : {0.05, 0.1, 0.3}) {
    for (double mean : {0.0, 0.02}) {
      const auto m = discretize_transition(mean, sigma, g3);
      for (std::size_t i = 0; i < 3; ++i) {
        double q[3], z = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
          z += q[j] = oracle::ratio_mass(g3.lower(j) / g3.upper(i), g3.upper(j) / g3.lower(i), mean, sigma);
        for (std::size_t j = 0; j < 3; ++j) worst_quad = std::max(worst_quad, std::abs(m(i, j) - q[j] / z));
      }
    }
  }
  return {worst_row <= 1e-9 && worst_quad <= 1e-6,
          fmt("max |row sum - 1| %.2e, max quadrature deviation %.2e", worst_row, worst_quad)};
}

Outcome fit_recovery() {
  std::mt19937_64 rng(103);
  std::normal_distribution<double> step(0.001, 0.02);
  std::vector<double> y{80.0};
  for (int i = 0; i < 100000; ++i) y.push_back(y.back() * std::exp(step(rng)));
  const auto fit = fit_transition({y});
  const double e_mu = std::abs(fit.mu / 0.001 - 1.0), e_sigma = std::abs(fit.sigma / 0.02 - 1.0);
  // The mean's sampling error alone is 0.02 / sqrt(1e5), 6.3% of 0.001, so this
  // check is seed dependent; the seed is fixed and was not tuned.
  return {e_mu <= 0.02 && e_sigma <= 0.02,
          fmt("mu %.6f (%.2f%%, s.e. 6.3%%), sigma %.6f", fit.mu, 100 * e_mu, fit.sigma) + fmt(" (%.2f%%)", 100 * e_sigma)};
}

Outcome clean_end_to_end() {
  const HrGrid grid;
  const auto transition = suite::training_transition(grid);
  const auto s = synth::generate(synth::WalkConfig{0.0, suite::kWalkSigma}, synth::SessionConfig{}, 104, "clean");
  const auto rows = infer_series(emit_session(s, grid, SpectralParams{}), transition);
  const double mae = mean_absolute_error(join_labels(rows, s));
  return {mae <= grid.bin_width(), fmt("MAE %.3f BPM over %.0f windows (limit %.4f)", mae, static_cast<double>(rows.size()), grid.bin_width())};
}

struct SuiteTotals {
  double argmax = 0.0, filtered = 0.0, viterbi = 0.0, reduction = 0.0;
  bool full_equals_plain = true;
};

const SuiteTotals& artifact_suite() {
  static const SuiteTotals totals = [] {
    const auto transition = suite::training_transition(HrGrid());
    SuiteTotals t;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto r = suite::run_seed(suite::artifact_config(), transition, seed);
      t.argmax += r.argmax_mae / 10.0;
      t.filtered += r.filtered_mae / 10.0;
      t.viterbi += r.viterbi_mae / 10.0;
      t.reduction += (1.0 - r.mae_95 / r.mae_full) / 10.0;
      t.full_equals_plain = t.full_equals_plain && r.mae_full == r.filtered_mae;
    }
    return t;
  }();
  return totals;
}

Outcome calibration() {
  const HrGrid grid;
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> center(50.0, 190.0), spread(5.0, 25.0), u(0.0, 1.0);
  std::vector<BinDistribution> post;
  std::vector<double> truths;
  for (int n = 0; n < 20000; ++n) {
    // Mixtures of one or two discretized Gaussians.
    auto d = gaussian_label(grid, center(rng), spread(rng));
    if (u(rng) < 0.5) {
      const auto e = gaussian_label(grid, center(rng), spread(rng));
      const double w = u(rng);
      std::vector<double> mix(grid.bin_count());
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = w * d[i] + (1.0 - w) * e[i];
      d = BinDistribution::normalized(grid, mix);
    }
    // Truth drawn from the distribution the metric scores: the 1000-bin upsampling.
    const auto fine = upsample(d, 1000);
    std::discrete_distribution<std::size_t> pick(fine.probs().begin(), fine.probs().end());
    const std::size_t b = pick(rng);
    truths.push_back(fine.grid().lower(b) + u(rng) * fine.grid().bin_width());
    post.push_back(std::move(d));
  }
  const auto curve = calibration_curve(post, truths);
  double worst = 0.0;
  bool monotone = true;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    worst = std::max(worst, std::abs(curve[k].coverage - curve[k].confidence));
    if (k && curve[k].coverage < curve[k - 1].coverage) monotone = false;
  }
  // Monotonicity on arbitrary (uncalibrated) inputs as well.
  std::vector<BinDistribution> random_post;
  std::vector<double> random_truths;
  std::uniform_real_distribution<double> y(30.0, 210.0);
  for (int n = 0; n < 2000; ++n) {
    random_post.emplace_back(grid, oracle::random_distribution(grid.bin_count(), rng));
    random_truths.push_back(y(rng));
  }
  const auto rc = calibration_curve(random_post, random_truths);
  for (std::size_t k = 1; k < rc.size(); ++k) monotone = monotone && rc[k].coverage >= rc[k - 1].coverage;
  return {worst <= 0.03 && monotone, fmt("max |coverage - q| %.4f, nondecreasing %.0f", worst, monotone)};
}

Outcome nll_anchors() {
  const HrGrid grid;
  std::vector<BinDistribution> uniform, onehot;
  std::vector<double> truths;
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> y(30.0, 210.0);
  for (int n = 0; n < 1000; ++n) {
    truths.push_back(y(rng));
    uniform.push_back(BinDistribution::uniform(grid));
    onehot.push_back(BinDistribution::one_hot(grid, bin_index(grid, truths.back())));
  }
  const double u = nll(uniform, truths), o = nll(onehot, truths);
  return {std::abs(u - std::log(64.0)) <= 1e-9 && o == 0.0, fmt("uniform %.12f (ln 64 = %.12f), one-hot %.3g", u, std::log(64.0), o)};
}

}  // namespace

int main() {
  check("quantization-error", 1.0, quantization_error);
  check("oracle-equivalence", 5.0, oracle_equivalence);
  check("transition-validity", 0.0, transition_validity);
  check("fit-recovery", 0.0, fit_recovery);
  check("clean-end-to-end", 10.0, clean_end_to_end);
  check("message-passing-benefit", 0.0, [] {
    const auto& t = artifact_suite();
    return Outcome{t.filtered <= 0.9 * t.argmax,
                   fmt("filtered %.3f vs argmax %.3f BPM (ratio %.3f)", t.filtered, t.argmax, t.filtered / t.argmax)};
  });
  check("viterbi-benefit", 0.0, [] {
    const auto& t = artifact_suite();
    return Outcome{t.viterbi <= 1.05 * t.filtered,
                   fmt("viterbi %.3f vs filtered %.3f BPM (ratio %.3f)", t.viterbi, t.filtered, t.viterbi / t.filtered)};
  });
  check("rejection-sweep", 0.0, [] {
    const auto& t = artifact_suite();
    return Outcome{t.reduction >= 0.05 && t.full_equals_plain,
                   fmt("MAE reduction at 95%% retained %.1f%%, full sweep equals plain MAE %.0f", 100 * t.reduction,
                       t.full_equals_plain)};
  });
  check("calibration", 0.0, calibration);
  check("nll-anchors", 0.0, nll_anchors);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
