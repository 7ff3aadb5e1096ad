// Library walkthrough: synthesize a session with motion artifacts, build
// spectral emissions, then compare per-window argmax, filtering and Viterbi.

#include <cstdio>

#include "beliefhr/beliefhr.hpp"

using namespace beliefhr;

int main() {
  const HrGrid grid;  // 64 bins over [30, 210) BPM

  synth::SessionConfig cfg;
  cfg.artifact.fraction = 0.3;
  const RawSession session = synth::generate(synth::WalkConfig{}, cfg, /*seed=*/7);

  // Transition model from an independent training trajectory.
  const auto train = synth::hr_walk(0.0, 0.01, 5000, /*seed=*/1000);
  const LogChangeFit fit = fit_transition({train});
  const auto transition = TransitionModel::from_parameters(grid, fit.mu, fit.sigma);

  const EmissionSeries emissions = emit_session(session, grid, SpectralParams{});
  const auto argmax = join_labels(argmax_series(emissions), session);
  const auto filtered = join_labels(infer_series(emissions, transition), session);
  const auto decoded = join_labels(decode_series(emissions, transition), session);

  std::printf("windows:           %zu\n", emissions.rows.size());
  std::printf("fit:               mu=%.5f sigma=%.5f\n", fit.mu, fit.sigma);
  std::printf("argmax MAE:        %.3f BPM\n", mean_absolute_error(argmax));
  std::printf("filtered MAE:      %.3f BPM\n", mean_absolute_error(filtered));
  std::printf("viterbi MAE:       %.3f BPM\n", mean_absolute_error(decoded));

  const double keep[] = {1.0, 0.95, 0.9};
  for (const auto& p : rejection_sweep(filtered, UncertaintyMetric::kEntropy, keep))
    std::printf("retain %3.0f%%:       %.3f BPM\n", 100.0 * p.retained_fraction, p.mae);
  return 0;
}
