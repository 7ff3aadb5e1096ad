// beliefhr: heart-rate tracking from PPG + accelerometer sessions.
//
//   beliefhr synth          --out DIR [--seed N] ...
//   beliefhr fit-transition --session DIR... --out transition.txt
//   beliefhr emit           --session DIR --out emissions.txt
//   beliefhr infer          --emissions FILE --transition FILE --out predictions.csv
//   beliefhr decode         --emissions FILE --transition FILE --out predictions.csv
//   beliefhr eval           --predictions CSV... --session DIR... [--out metrics.csv]
//   beliefhr calibrate      --predictions CSV... --session DIR... --out curve.csv
//   beliefhr reject-sweep   --predictions CSV... --session DIR... --out curve.csv
//
// Exit status: 0 ok, 2 configuration error, 3 data/format error, 4 numeric failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "beliefhr/beliefhr.hpp"

namespace fs = std::filesystem;
using namespace beliefhr;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct RunConfig {
  std::size_t grid_bins = 64;
  double y_min = 30.0;
  double y_max = 210.0;
  double sigma_y = 1.5;
  FrontendConfig frontend;
  SpectralParams spectral;
  bool reset_on_collapse = false;
  bool dump_posterior = false;
  std::uint64_t seed = 1;

  HrGrid grid() const { return HrGrid(grid_bins, y_min, y_max); }
  CollapsePolicy policy() const {
    return reset_on_collapse ? CollapsePolicy::kResetUniform : CollapsePolicy::kError;
  }

  void validate() const {
    try {
      grid();
      spectral.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    if (!(sigma_y > 0.0)) throw ConfigError("sigma-y must be > 0");
    if (frontend.bp_order < 1) throw ConfigError("bp-order must be >= 1");
  }
};

// Pairs of (predictions file, session dir) joined into evaluation records.
struct EvalInputs {
  std::vector<PredictionRecord> records;
  std::vector<BinDistribution> posteriors;  // empty when any file lacks posterior columns
  std::vector<double> truths;
};

EvalInputs load_eval_inputs(const std::vector<std::string>& predictions, const std::vector<std::string>& sessions,
                            const HrGrid& grid, bool need_posteriors) {
  if (predictions.size() != sessions.size())
    throw ConfigError("--predictions and --session must be given the same number of times");
  EvalInputs in;
  bool have_posteriors = true;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    std::ifstream f(predictions[i]);
    if (!f) throw FormatError(predictions[i], 0, "cannot open file");
    auto rows = read_predictions(f, predictions[i]);
    const RawSession session = load_session(sessions[i]);
    auto recs = join_labels(rows, session);
    in.records.insert(in.records.end(), recs.begin(), recs.end());
    for (const auto& r : recs) in.truths.push_back(r.truth);
    have_posteriors = have_posteriors && !rows.empty() && !rows.front().posterior.empty();
    if (have_posteriors) {
      auto post = row_posteriors(rows, grid, predictions[i]);
      in.posteriors.insert(in.posteriors.end(), post.begin(), post.end());
    }
  }
  if (!have_posteriors) {
    in.posteriors.clear();
    if (need_posteriors)
      throw ConfigError("posterior columns required; rerun infer/decode with --dump-posterior");
  }
  return in;
}

void write_predictions(const fs::path& out, const std::vector<PredictionRow>& rows, std::size_t bins) {
  io::AtomicFile f(out);
  PredictionWriter w(f.stream(), bins);
  for (const auto& r : rows) w.write(r);
  f.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heart-rate tracking with a hidden Markov model over quantized heart rate"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");

  RunConfig cfg;
  app.add_option("--grid-bins", cfg.grid_bins, "Number of heart-rate bins")->capture_default_str();
  app.add_option("--y-min", cfg.y_min, "Lower grid bound (BPM)")->capture_default_str();
  app.add_option("--y-max", cfg.y_max, "Upper grid bound (BPM)")->capture_default_str();
  app.add_option("--sigma-y", cfg.sigma_y, "Std of the discretized Gaussian label (BPM)")->capture_default_str();
  app.add_option("--bp-lo", cfg.frontend.bp_lo_hz, "Band-pass lower corner (Hz)")->capture_default_str();
  app.add_option("--bp-hi", cfg.frontend.bp_hi_hz, "Band-pass upper corner (Hz)")->capture_default_str();
  app.add_option("--bp-order", cfg.frontend.bp_order, "Butterworth prototype order")->capture_default_str();
  app.add_option("--window", cfg.frontend.window_s, "Analysis window (s)")->capture_default_str();
  app.add_option("--shift", cfg.frontend.shift_s, "Prediction interval (s)")->capture_default_str();
  app.add_option("--beta", cfg.spectral.sharpness, "Spectral emission sharpness")->capture_default_str();
  app.add_option("--lambda", cfg.spectral.accel_suppression, "Accelerometer suppression weight")->capture_default_str();
  app.add_option("--eps", cfg.spectral.floor, "Relative spectral floor")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_flag("--reset-on-collapse", cfg.reset_on_collapse, "Reset the belief to uniform on collapse");
  app.add_flag("--dump-posterior", cfg.dump_posterior, "Append per-bin posterior columns");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic session directory");
  std::string synth_out;
  synth::SessionConfig sc;
  synth::WalkConfig wc;
  synth_cmd->add_option("--out", synth_out, "Output session directory")->required();
  synth_cmd->add_option("--duration", sc.duration_s, "Duration (s)")->capture_default_str();
  synth_cmd->add_option("--walk-mu", wc.mu, "Mean log HR change per step")->capture_default_str();
  synth_cmd->add_option("--walk-sigma", wc.sigma, "Std of log HR change per step")->capture_default_str();
  synth_cmd->add_option("--noise", sc.noise_std, "PPG noise std")->capture_default_str();
  synth_cmd->add_option("--accel-noise", sc.accel_noise_std, "Accelerometer noise std")->capture_default_str();
  synth_cmd->add_option("--ppg-rate", sc.ppg_rate, "PPG sampling rate (Hz)")->capture_default_str();
  synth_cmd->add_option("--acc-rate", sc.acc_rate, "Accelerometer sampling rate (Hz)")->capture_default_str();
  synth_cmd->add_option("--ppg-channels", sc.ppg_channels, "PPG channel count")->capture_default_str();
  synth_cmd->add_option("--acc-channels", sc.acc_channels, "Accelerometer channel count")->capture_default_str();
  synth_cmd->add_option("--artifact-fraction", sc.artifact.fraction, "Share of time with motion artifacts")
      ->capture_default_str();
  synth_cmd->add_option("--artifact-offset", sc.artifact.offset_bpm, "Artifact frequency offset from HR (BPM)")
      ->capture_default_str();
  synth_cmd->add_option("--artifact-amplitude", sc.artifact.amplitude, "Artifact amplitude")->capture_default_str();
  synth_cmd->add_option("--artifact-block", sc.artifact.block_s, "Artifact block length (s)")->capture_default_str();
  synth_cmd->add_flag("--mirror-accel", sc.artifact.mirror_to_accel, "Inject artifacts into accelerometer too");

  // fit-transition
  auto* fit_cmd = app.add_subcommand("fit-transition", "Fit and discretize the HR transition model from labels");
  std::vector<std::string> fit_sessions;
  std::string fit_out;
  fit_cmd->add_option("--session", fit_sessions, "Session directories with labels.csv")->required();
  fit_cmd->add_option("--out", fit_out, "Transition artifact to write")->required();

  // emit
  auto* emit_cmd = app.add_subcommand("emit", "Baseline spectral emissions for every window of a session");
  std::string emit_session_dir, emit_out;
  emit_cmd->add_option("--session", emit_session_dir, "Session directory")->required();
  emit_cmd->add_option("--out", emit_out, "Emission file to write")->required();

  // infer / decode
  std::string emissions_path, transition_path, pred_out;
  auto* infer_cmd = app.add_subcommand("infer", "Online belief propagation -> predictions CSV");
  auto* decode_cmd = app.add_subcommand("decode", "Offline Viterbi decoding -> predictions CSV");
  for (auto* c : {infer_cmd, decode_cmd}) {
    c->add_option("--emissions", emissions_path, "Emission file")->required();
    c->add_option("--transition", transition_path, "Transition artifact")->required();
    c->add_option("--out", pred_out, "Predictions CSV to write")->required();
  }

  // eval / calibrate / reject-sweep
  std::vector<std::string> eval_preds, eval_sessions;
  std::string eval_out;
  std::size_t upsample_to = 1000;
  std::string metric = "entropy";
  std::vector<double> fractions{1.0, 0.99, 0.98, 0.97, 0.96, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.6, 0.5};
  auto* eval_cmd = app.add_subcommand("eval", "MAE by session, NLL, grouped MAPE");
  auto* cal_cmd = app.add_subcommand("calibrate", "Calibration curve (confidence, coverage)");
  auto* rej_cmd = app.add_subcommand("reject-sweep", "MAE after discarding the most uncertain predictions");
  for (auto* c : {eval_cmd, cal_cmd, rej_cmd}) {
    c->add_option("--predictions", eval_preds, "Predictions CSV (repeatable)")->required();
    c->add_option("--session", eval_sessions, "Matching session directory (repeatable)")->required();
  }
  eval_cmd->add_option("--out", eval_out, "Metrics CSV to write");
  cal_cmd->add_option("--out", eval_out, "Curve CSV to write")->required();
  cal_cmd->add_option("--upsample", upsample_to, "Bins after linear upsampling")->capture_default_str();
  rej_cmd->add_option("--out", eval_out, "Curve CSV to write")->required();
  rej_cmd->add_option("--metric", metric, "Uncertainty measure")
      ->check(CLI::IsMember({"entropy", "std"}))
      ->capture_default_str();
  rej_cmd->add_option("--fractions", fractions, "Retained fractions")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    cfg.validate();
    const HrGrid grid = cfg.grid();

    if (*synth_cmd) {
      wc.y_min = cfg.y_min;
      wc.y_max = cfg.y_max;
      const fs::path out(synth_out);
      const RawSession s = synth::generate(wc, sc, cfg.seed, out.filename().string());
      save_session(s, out);
      std::printf("synth: wrote %s (%.0f s, %zu labels, seed %llu)\n", out.string().c_str(), s.duration(),
                  s.labels.size(), static_cast<unsigned long long>(cfg.seed));
    } else if (*fit_cmd) {
      std::vector<std::vector<double>> seqs;
      for (const auto& dir : fit_sessions) {
        const RawSession s = load_session(dir);
        std::vector<double> hr;
        for (const auto& l : s.labels) hr.push_back(l.bpm);
        seqs.push_back(std::move(hr));
      }
      const LogChangeFit fit = fit_transition(seqs);
      const TransitionModel model = TransitionModel::from_parameters(grid, fit.mu, fit.sigma);
      io::write_file_atomic(fit_out, save_transition(model));
      std::printf("fit-transition: mu=%.6g sigma=%.6g over %zu session(s) -> %s\n", fit.mu, fit.sigma,
                  seqs.size(), fit_out.c_str());
    } else if (*emit_cmd) {
      const RawSession s = load_session(emit_session_dir);
      const EmissionSeries series = emit_session(s, grid, cfg.spectral, cfg.frontend);
      io::write_file_atomic(emit_out, save_emissions(series));
      std::printf("emit: %zu windows from %s -> %s\n", series.rows.size(), s.id.c_str(), emit_out.c_str());
    } else if (*infer_cmd || *decode_cmd) {
      const TransitionModel transition = load_transition(io::read_file(transition_path), transition_path, &grid);
      const std::size_t bins = cfg.dump_posterior ? grid.bin_count() : 0;
      if (*infer_cmd) {
        std::ifstream in(emissions_path);
        if (!in) throw FormatError(emissions_path, 0, "cannot open file");
        EmissionReader reader(in, emissions_path, &grid);
        io::AtomicFile out(pred_out);
        PredictionWriter writer(out.stream(), bins);
        std::size_t resets = 0;
        const std::size_t n = infer_stream(reader, transition, writer, cfg.dump_posterior, cfg.policy(), &resets);
        out.commit();
        std::printf("infer: %zu predictions -> %s", n, pred_out.c_str());
        if (resets) std::printf(" (%zu belief resets)", resets);
        std::printf("\n");
      } else {
        const EmissionSeries series = load_emissions(io::read_file(emissions_path), emissions_path, &grid);
        if (series.rows.empty()) throw InsufficientDataError("emission file has no rows");
        const auto rows = decode_series(series, transition, cfg.dump_posterior, cfg.policy());
        write_predictions(pred_out, rows, bins);
        std::printf("decode: %zu predictions -> %s\n", rows.size(), pred_out.c_str());
      }
    } else if (*eval_cmd) {
      const EvalInputs in = load_eval_inputs(eval_preds, eval_sessions, grid, false);
      std::ostringstream report;
      report << "metric,value\n";
      const SessionMae mae = mae_by_session(in.records);
      report << "mae_mean_bpm," << io::format_double(mae.mean, 10) << '\n';
      report << "mae_std_bpm," << io::format_double(mae.std, 10) << '\n';
      for (const auto& [id, m] : mae.per_session) report << "mae_bpm[" << id << "]," << io::format_double(m, 10) << '\n';
      if (!in.posteriors.empty()) report << "nll_nats," << io::format_double(nll(in.posteriors, in.truths), 10) << '\n';
      bool tagged = !in.records.empty();
      for (const auto& r : in.records) tagged = tagged && r.tag.has_value();
      if (tagged) {
        for (const auto& [tag, v] : grouped_mape(in.records))
          report << "mape[" << tag << "]," << io::format_double(v, 10) << '\n';
      }
      double qerr = 0.0;
      std::size_t qn = 0;
      for (double y : in.truths) {
        if (!grid.contains(y)) continue;
        qerr += std::abs(y - dist_stats(gaussian_label(grid, y, cfg.sigma_y)).mean);
        ++qn;
      }
      if (qn) report << "label_quantization_error_bpm," << io::format_double(qerr / static_cast<double>(qn), 10) << '\n';
      if (!eval_out.empty()) io::write_file_atomic(eval_out, report.str());
      std::fputs(report.str().c_str(), stdout);
    } else if (*cal_cmd) {
      const EvalInputs in = load_eval_inputs(eval_preds, eval_sessions, grid, true);
      const auto curve = calibration_curve(in.posteriors, in.truths, upsample_to);
      std::ostringstream out;
      out << "confidence,coverage\n";
      double worst = 0.0;
      for (const auto& p : curve) {
        out << io::format_double(p.confidence, 6) << ',' << io::format_double(p.coverage, 10) << '\n';
        worst = std::max(worst, std::abs(p.coverage - p.confidence));
      }
      io::write_file_atomic(eval_out, out.str());
      std::printf("calibrate: %zu predictions, max |coverage - confidence| = %.4f -> %s\n", in.truths.size(), worst,
                  eval_out.c_str());
    } else if (*rej_cmd) {
      const EvalInputs in = load_eval_inputs(eval_preds, eval_sessions, grid, false);
      const auto m = metric == "std" ? UncertaintyMetric::kStd : UncertaintyMetric::kEntropy;
      const auto sweep = rejection_sweep(in.records, m, fractions);
      std::ostringstream out;
      out << "retained_fraction,mae_bpm\n";
      for (const auto& p : sweep)
        out << io::format_double(p.retained_fraction, 6) << ',' << io::format_double(p.mae, 10) << '\n';
      io::write_file_atomic(eval_out, out.str());
      std::printf("reject-sweep: MAE %.4f at 100%% retained -> %s\n", mean_absolute_error(in.records), eval_out.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "beliefhr %s: %s\n", app.get_subcommands().front()->get_name().c_str(), e.what());
    switch (e.error_class()) {
      case ErrorClass::kConfig: return kExitConfig;
      case ErrorClass::kData: return kExitData;
      case ErrorClass::kNumeric: return kExitNumeric;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "beliefhr %s: %s\n", app.get_subcommands().front()->get_name().c_str(), e.what());
    return kExitData;
  }
  return 0;
}
