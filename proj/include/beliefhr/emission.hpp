#pragma once

// Per-window emission distributions over the HR grid, plus the plain-text
// emission series format shared with external model trainers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "beliefhr/errors.hpp"
#include "beliefhr/frontend.hpp"
#include "beliefhr/hr_grid.hpp"
#include "beliefhr/text_io.hpp"

namespace beliefhr {

/// Source of f_N(., X_t). Output is re-validated here rather than trusted.
class EmissionSource {
 public:
  explicit EmissionSource(HrGrid grid) : grid_(std::move(grid)) {}
  virtual ~EmissionSource() = default;

  const HrGrid& grid() const noexcept { return grid_; }

  BinDistribution emit(const SignalWindow& window) const {
    BinDistribution d = do_emit(window);
    if (!(d.grid() == grid_)) throw ConfigError("emission source produced a distribution on a foreign grid");
    return d;
  }

 protected:
  virtual BinDistribution do_emit(const SignalWindow& window) const = 0;

 private:
  HrGrid grid_;
};

struct SpectralParams {
  double sharpness = 2.0;          // beta
  double accel_suppression = 1.0;  // lambda
  double floor = 1e-6;             // epsilon, relative to the spectral maximum

  void validate() const {
    if (!(sharpness >= 0.0)) throw ParameterError("spectral emission: sharpness must be >= 0");
    if (!(accel_suppression >= 0.0)) throw ParameterError("spectral emission: accel suppression must be >= 0");
    if (!(floor > 0.0)) throw ParameterError("spectral emission: floor must be > 0");
  }
};

/// Per-frequency PPG energy left after subtracting the scaled accel spectrum,
/// averaged over sub-windows.
inline std::vector<double> suppressed_spectrum(const SignalWindow& w, double accel_suppression) {
  std::vector<double> s(w.bins, 0.0);
  for (std::size_t sub = 0; sub < w.sub_windows; ++sub) {
    for (std::size_t b = 0; b < w.bins; ++b)
      s[b] += std::max(0.0, w.spec(sub, b, 0) - accel_suppression * w.spec(sub, b, 1));
  }
  for (double& v : s) v /= static_cast<double>(std::max<std::size_t>(w.sub_windows, 1));
  return s;
}

/// Baseline emission: probs proportional to (s_j / max s + floor)^beta.
inline BinDistribution spectral_emission(const SignalWindow& w, const HrGrid& grid, const SpectralParams& params,
                                         const FrontendConfig& frontend = {}) {
  params.validate();
  if (w.bins != frontend.spec_bins || w.spectrogram.size() != w.sub_windows * w.bins * 2)
    throw ConfigError("spectral emission: window spectrogram shape does not match frontend configuration");
  const std::vector<double> spectrum = suppressed_spectrum(w, params.accel_suppression);

  std::vector<double> s(grid.bin_count());
  if (grid.bin_count() == w.bins) {
    for (std::size_t j = 0; j < w.bins; ++j) {
      const double bpm = 60.0 * frontend.bin_frequency(j);
      if (bpm < grid.lower(j) || bpm >= grid.upper(j)) {
        throw ConfigError("spectral emission: spectrogram bin " + std::to_string(j) + " (" + std::to_string(bpm) +
                          " BPM) does not fall in HR bin " + std::to_string(j) + " of grid " + describe(grid));
      }
    }
    s = spectrum;
  } else {
    // Re-bin: interpolate the spectrum linearly in frequency at each HR bin center.
    const double f0 = frontend.bin_frequency(0);
    const double df = frontend.bin_frequency(1) - f0;
    for (std::size_t i = 0; i < grid.bin_count(); ++i) {
      const double x = (grid.center(i) / 60.0 - f0) / df;
      if (x <= 0.0) {
        s[i] = spectrum.front();
      } else if (x >= static_cast<double>(w.bins - 1)) {
        s[i] = spectrum.back();
      } else {
        const auto k = static_cast<std::size_t>(x);
        const double frac = x - static_cast<double>(k);
        s[i] = (1.0 - frac) * spectrum[k] + frac * spectrum[k + 1];
      }
    }
  }

  const double peak = *std::max_element(s.begin(), s.end());
  if (!(peak > 0.0) || params.sharpness == 0.0) return BinDistribution::uniform(grid);
  for (double& v : s) v = std::pow(v / peak + params.floor, params.sharpness);
  return BinDistribution::normalized(grid, std::move(s));
}

class SpectralEmissionSource : public EmissionSource {
 public:
  SpectralEmissionSource(HrGrid grid, SpectralParams params, FrontendConfig frontend = {})
      : EmissionSource(std::move(grid)), params_(params), frontend_(frontend) {
    params_.validate();
  }

 protected:
  BinDistribution do_emit(const SignalWindow& w) const override {
    return spectral_emission(w, grid(), params_, frontend_);
  }

 private:
  SpectralParams params_;
  FrontendConfig frontend_;
};

/// Emission series on a regular time grid: row k belongs to time t0 + k*dt.
struct EmissionSeries {
  HrGrid grid;
  double t0 = 0.0;
  double dt = 2.0;
  std::vector<BinDistribution> rows;
};

inline constexpr double kEmissionFileTolerance = 1e-6;

inline std::string emission_header(const HrGrid& grid, double t0, double dt) {
  std::string out;
  out += "bins=" + std::to_string(grid.bin_count()) + "\n";
  out += "y_min=" + io::format_double(grid.y_min()) + "\n";
  out += "y_max=" + io::format_double(grid.y_max()) + "\n";
  out += "t0=" + io::format_double(t0) + "\n";
  out += "dt=" + io::format_double(dt) + "\n";
  return out;
}

inline std::string emission_row(const BinDistribution& d) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) out += ' ';
    out += io::format_double(d[i], 10);
  }
  out += '\n';
  return out;
}

/// Streaming emission-file writer.
class EmissionWriter {
 public:
  EmissionWriter(std::ostream& out, const HrGrid& grid, double t0, double dt) : out_(out), grid_(grid) {
    if (!(dt > 0.0)) throw ParameterError("emission file: dt must be > 0");
    out_ << emission_header(grid, t0, dt);
  }
  void write(const BinDistribution& d) {
    if (!(d.grid() == grid_)) throw ConfigError("emission writer: distribution grid differs from file header");
    out_ << emission_row(d);
  }

 private:
  std::ostream& out_;
  HrGrid grid_;
};

/// Streaming emission-file reader; holds one row at a time.
class EmissionReader {
 public:
  EmissionReader(std::istream& in, std::string source, const HrGrid* expected = nullptr)
      : in_(in), source_(std::move(source)) {
    const char* keys[] = {"bins", "y_min", "y_max", "t0", "dt"};
    double header[5] = {};
    for (std::size_t k = 0; k < 5; ++k) {
      std::string line;
      if (!next_line(line)) throw FormatError(source_, line_, "missing header line '" + std::string(keys[k]) + "='");
      const std::string prefix = std::string(keys[k]) + "=";
      if (line.rfind(prefix, 0) != 0) throw FormatError(source_, line_, "expected '" + prefix + "'");
      header[k] = io::parse_double(std::string_view(line).substr(prefix.size()), source_, line_);
    }
    if (!(header[0] >= 2) || header[0] != std::floor(header[0]))
      throw FormatError(source_, 1, "bins must be an integer >= 2");
    try {
      grid_ = HrGrid(static_cast<std::size_t>(header[0]), header[1], header[2]);
    } catch (const ParameterError& e) {
      throw FormatError(source_, 2, e.what());
    }
    if (expected && !(grid_ == *expected))
      throw FormatError(source_, 1, "grid header (" + describe(grid_) + ") does not match configured grid (" +
                                        describe(*expected) + ")");
    t0_ = header[3];
    dt_ = header[4];
    if (!(dt_ > 0.0)) throw FormatError(source_, 5, "dt must be > 0");
  }

  const HrGrid& grid() const noexcept { return grid_; }
  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  std::size_t rows_read() const noexcept { return rows_; }

  /// Next row, or nullopt at end of file.
  std::optional<BinDistribution> next() {
    std::string line;
    while (next_line(line)) {
      if (io::trim(line).empty()) continue;
      const auto toks = io::tokens(line);
      if (toks.size() != grid_.bin_count()) {
        throw FormatError(source_, line_, "row " + std::to_string(rows_ + 1) + " has " + std::to_string(toks.size()) +
                                              " values, bins=" + std::to_string(grid_.bin_count()));
      }
      std::vector<double> p(toks.size());
      double sum = 0.0;
      for (std::size_t i = 0; i < toks.size(); ++i) {
        p[i] = io::parse_double(toks[i], source_, line_);
        if (!(p[i] >= 0.0)) throw FormatError(source_, line_, "row " + std::to_string(rows_ + 1) + " has a negative entry");
        sum += p[i];
      }
      if (std::abs(sum - 1.0) > kEmissionFileTolerance) {
        throw FormatError(source_, line_, "row " + std::to_string(rows_ + 1) + " sums to " + std::to_string(sum) +
                                              " (tolerance 1e-6)");
      }
      ++rows_;
      return BinDistribution::normalized(grid_, std::move(p));
    }
    return std::nullopt;
  }

 private:
  bool next_line(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
  std::size_t rows_ = 0;
  HrGrid grid_;
  double t0_ = 0.0;
  double dt_ = 1.0;
};

inline std::string save_emissions(const EmissionSeries& series) {
  std::ostringstream out;
  EmissionWriter w(out, series.grid, series.t0, series.dt);
  for (const auto& r : series.rows) w.write(r);
  return out.str();
}

inline EmissionSeries load_emissions(const std::string& text, const std::string& source = "emissions",
                                     const HrGrid* expected = nullptr) {
  std::istringstream in(text);
  EmissionReader reader(in, source, expected);
  EmissionSeries series{reader.grid(), reader.t0(), reader.dt(), {}};
  while (auto row = reader.next()) series.rows.push_back(std::move(*row));
  return series;
}

/// Replays a precomputed series; window k maps to row round((center - t0) / dt).
class FileEmissionSource : public EmissionSource {
 public:
  FileEmissionSource(EmissionSeries series, double window_s)
      : EmissionSource(series.grid), series_(std::move(series)), half_window_(window_s / 2.0) {}

  std::size_t size() const noexcept { return series_.rows.size(); }

 protected:
  BinDistribution do_emit(const SignalWindow& w) const override {
    const double k = std::round((w.start_time + half_window_ - series_.t0) / series_.dt);
    if (k < 0.0 || k >= static_cast<double>(series_.rows.size()))
      throw RangeError("no emission row for window starting at " + std::to_string(w.start_time) + " s");
    return series_.rows[static_cast<std::size_t>(k)];
  }

 private:
  EmissionSeries series_;
  double half_window_;
};

}  // namespace beliefhr
