#pragma once

// End-to-end glue: session -> emission series -> filtered / decoded
// predictions, the predictions CSV, and the join with ground-truth labels.

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "beliefhr/emission.hpp"
#include "beliefhr/evaluation.hpp"
#include "beliefhr/frontend.hpp"
#include "beliefhr/hr_grid.hpp"
#include "beliefhr/inference.hpp"
#include "beliefhr/text_io.hpp"
#include "beliefhr/transition.hpp"

namespace beliefhr {

/// Emission rows are time-stamped at window centers.
inline EmissionSeries emit_session(const RawSession& session, const EmissionSource& source,
                                   const FrontendConfig& frontend = {}) {
  WindowBuilder windows(session, frontend);
  EmissionSeries series{source.grid(), session.start_time + frontend.window_s / 2.0, frontend.shift_s, {}};
  series.rows.reserve(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k) series.rows.push_back(source.emit(windows.window(k)));
  return series;
}

inline EmissionSeries emit_session(const RawSession& session, const HrGrid& grid, const SpectralParams& params,
                                   const FrontendConfig& frontend = {}) {
  return emit_session(session, SpectralEmissionSource(grid, params, frontend), frontend);
}

struct PredictionRow {
  double time = 0.0;
  double mean = 0.0;  // BPM
  double mode = 0.0;  // BPM
  double entropy = 0.0;
  double std = 0.0;
  std::vector<double> posterior;  // empty unless dumped
};

inline PredictionRow make_row(double time, const BinDistribution& posterior, bool dump) {
  const DistStats st = dist_stats(posterior);
  PredictionRow r{time, st.mean, posterior.grid().center(posterior.mode()), st.entropy, st.std, {}};
  if (dump) r.posterior.assign(posterior.probs().begin(), posterior.probs().end());
  return r;
}

class PredictionWriter {
 public:
  PredictionWriter(std::ostream& out, std::size_t posterior_bins) : out_(out), bins_(posterior_bins) {
    out_ << "time_s,hr_mean_bpm,hr_mode_bpm,entropy_nats,std_bpm";
    for (std::size_t i = 0; i < bins_; ++i) out_ << ",p" << i;
    out_ << '\n';
  }
  void write(const PredictionRow& r) {
    out_ << io::format_double(r.time, 12) << ',' << io::format_double(r.mean, 12) << ','
         << io::format_double(r.mode, 12) << ',' << io::format_double(r.entropy, 12) << ','
         << io::format_double(r.std, 12);
    if (r.posterior.size() != bins_) throw ConfigError("prediction row posterior width differs from header");
    for (double p : r.posterior) out_ << ',' << io::format_double(p, 10);
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  std::size_t bins_;
};

inline std::vector<PredictionRow> read_predictions(std::istream& in, const std::string& source) {
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t n = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (n == 1) {
      cols = io::split(line, ',').size();
      if (cols < 5) throw FormatError(source, 1, "predictions header needs at least 5 columns");
      continue;
    }
    if (io::trim(line).empty()) continue;
    const auto f = io::split(line, ',');
    if (f.size() != cols)
      throw FormatError(source, n, "row has " + std::to_string(f.size()) + " fields, header has " + std::to_string(cols));
    PredictionRow r;
    r.time = io::parse_double(f[0], source, n);
    r.mean = io::parse_double(f[1], source, n);
    r.mode = io::parse_double(f[2], source, n);
    r.entropy = io::parse_double(f[3], source, n);
    r.std = io::parse_double(f[4], source, n);
    for (std::size_t c = 5; c < cols; ++c) r.posterior.push_back(io::parse_double(f[c], source, n));
    rows.push_back(std::move(r));
  }
  if (n == 0) throw FormatError(source, 1, "empty predictions file");
  return rows;
}

/// Streams emissions through the online filter, one prediction row per emission.
/// Memory use does not grow with the number of rows.
inline std::size_t infer_stream(EmissionReader& emissions, const TransitionModel& transition, PredictionWriter& out,
                                bool dump_posterior, CollapsePolicy policy = CollapsePolicy::kError,
                                std::size_t* resets = nullptr) {
  if (!(emissions.grid() == transition.grid()))
    throw ConfigError("emission grid (" + describe(emissions.grid()) + ") differs from transition grid (" +
                      describe(transition.grid()) + ")");
  OnlineFilter f(transition, BinDistribution::uniform(transition.grid()), policy);
  std::size_t k = 0;
  while (auto e = emissions.next()) {
    const BeliefStep step = f.update(*e);
    if (step.reset && resets) ++*resets;
    out.write(make_row(emissions.t0() + static_cast<double>(k) * emissions.dt(), step.posterior, dump_posterior));
    ++k;
  }
  if (k == 0) throw InsufficientDataError("emission file has no rows");
  return k;
}

/// Filtered predictions for an in-memory series.
inline std::vector<PredictionRow> infer_series(const EmissionSeries& series, const TransitionModel& transition,
                                               bool dump_posterior = false,
                                               CollapsePolicy policy = CollapsePolicy::kError) {
  const BeliefTrace trace = filter(series.rows, transition, BinDistribution::uniform(transition.grid()), series.t0,
                                   series.dt, policy);
  std::vector<PredictionRow> rows;
  rows.reserve(trace.steps.size());
  for (std::size_t k = 0; k < trace.steps.size(); ++k)
    rows.push_back(make_row(series.t0 + static_cast<double>(k) * series.dt, trace.steps[k].posterior, dump_posterior));
  return rows;
}

/// Viterbi predictions: mean and mode are the path's bin center; entropy, std
/// and the optional posterior come from the filtered belief at the same step.
inline std::vector<PredictionRow> decode_series(const EmissionSeries& series, const TransitionModel& transition,
                                                bool dump_posterior = false,
                                                CollapsePolicy policy = CollapsePolicy::kError) {
  const ViterbiPath path = viterbi(series.rows, transition, BinDistribution::uniform(transition.grid()));
  std::vector<PredictionRow> rows = infer_series(series, transition, dump_posterior, policy);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].mean = path.bpm[k];
    rows[k].mode = path.bpm[k];
  }
  return rows;
}

/// Per-window argmax of the emission alone, without any temporal model.
inline std::vector<PredictionRow> argmax_series(const EmissionSeries& series) {
  std::vector<PredictionRow> rows;
  rows.reserve(series.rows.size());
  for (std::size_t k = 0; k < series.rows.size(); ++k) {
    PredictionRow r = make_row(series.t0 + static_cast<double>(k) * series.dt, series.rows[k], false);
    r.mean = r.mode;
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Attaches ground truth (labels interpolated at the row time) and tags.
inline std::vector<PredictionRecord> join_labels(const std::vector<PredictionRow>& rows, const RawSession& session) {
  if (session.labels.empty()) throw InsufficientDataError("session " + session.id + " has no labels");
  bool tagged = false;
  for (const auto& l : session.labels) tagged = tagged || !l.tag.empty();
  std::vector<PredictionRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    PredictionRecord rec{r.time, r.mean, interpolate_label(session.labels, r.time), r.entropy, r.std, session.id, {}};
    if (tagged) rec.tag = label_tag(session.labels, r.time);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<BinDistribution> row_posteriors(const std::vector<PredictionRow>& rows, const HrGrid& grid,
                                                   const std::string& source) {
  std::vector<BinDistribution> out;
  out.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].posterior.size() != grid.bin_count()) {
      throw FormatError(source, k + 2, "posterior has " + std::to_string(rows[k].posterior.size()) +
                                           " columns, grid has " + std::to_string(grid.bin_count()) +
                                           " bins (was the file written with --dump-posterior?)");
    }
    double sum = 0.0;
    for (double p : rows[k].posterior) sum += p;
    if (std::abs(sum - 1.0) > kEmissionFileTolerance) throw FormatError(source, k + 2, "posterior does not sum to 1");
    out.push_back(BinDistribution::normalized(grid, rows[k].posterior));
  }
  return out;
}

}  // namespace beliefhr
