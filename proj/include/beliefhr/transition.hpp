#pragma once

// Heart-rate transition model: a Gaussian over log(y_t / y_{t-1}) discretized
// onto the bins of an HrGrid as a row-stochastic matrix.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "beliefhr/errors.hpp"
#include "beliefhr/hr_grid.hpp"
#include "beliefhr/text_io.hpp"

namespace beliefhr {

inline constexpr double kSigmaFloor = 1e-4;

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct LogChangeFit {
  double mu = 0.0;
  double sigma = kSigmaFloor;
};

/// Mean and population std of the pooled log-ratios of consecutive samples.
inline LogChangeFit fit_transition(const std::vector<std::vector<double>>& hr_sequences) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& seq : hr_sequences) {
    for (double v : seq) {
      if (!(v > 0.0)) throw DomainError("fit_transition: heart rate " + std::to_string(v) + " is not positive");
    }
    for (std::size_t t = 1; t < seq.size(); ++t) {
      const double r = std::log(seq[t] / seq[t - 1]);
      sum += r;
      ++n;
    }
  }
  if (n == 0) throw InsufficientDataError("fit_transition: no consecutive heart-rate pairs");
  const double mu = sum / static_cast<double>(n);
  // Second pass around mu; avoids cancellation in E[r^2] - mu^2.
  double var = 0.0;
  for (const auto& seq : hr_sequences) {
    for (std::size_t t = 1; t < seq.size(); ++t) {
      const double d = std::log(seq[t] / seq[t - 1]) - mu;
      var += d * d;
    }
  }
  var /= static_cast<double>(n);
  return {mu, std::max(std::sqrt(var), kSigmaFloor)};
}

/// Row-major c x c matrix; row i is the previous bin, column j the next bin.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(std::size_t c) : c_(c), data_(c * c, 0.0) {}

  std::size_t size() const noexcept { return c_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * c_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * c_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * c_, c_}; }

 private:
  std::size_t c_ = 0;
  std::vector<double> data_;
};

/// Unnormalized kernel: probability mass of the log-ratio interval between bins i and j.
inline TransitionMatrix raw_transition_kernel(double mu, double sigma, const HrGrid& grid) {
  if (!(sigma > 0.0)) throw ParameterError("discretize_transition: sigma must be > 0");
  if (!(grid.y_min() > 0.0)) throw ParameterError("discretize_transition: grid must start above 0 BPM");
  const std::size_t c = grid.bin_count();
  TransitionMatrix raw(c);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double hi = std::log(grid.upper(j) / grid.lower(i));
      const double lo = std::log(grid.lower(j) / grid.upper(i));
      raw(i, j) = std::max(0.0, normal_cdf((hi - mu) / sigma) - normal_cdf((lo - mu) / sigma));
    }
  }
  return raw;
}

inline TransitionMatrix discretize_transition(double mu, double sigma, const HrGrid& grid) {
  TransitionMatrix m = raw_transition_kernel(mu, sigma, grid);
  const std::size_t c = grid.bin_count();
  for (std::size_t i = 0; i < c; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += m(i, j);
    if (!(sum > 0.0)) {
      // Mass fell entirely outside the grid (extreme mu); keep the state.
      m(i, i) = 1.0;
      continue;
    }
    for (std::size_t j = 0; j < c; ++j) m(i, j) /= sum;
  }
  return m;
}

class TransitionModel {
 public:
  /// Fitted parameters discretized onto `grid`.
  static TransitionModel from_parameters(const HrGrid& grid, double mu, double sigma) {
    if (!(sigma >= kSigmaFloor))
      throw ParameterError("transition sigma " + std::to_string(sigma) + " below floor 1e-4");
    return TransitionModel(grid, mu, sigma, discretize_transition(mu, sigma, grid));
  }

  /// Wraps an explicit matrix; rows must be non-negative and sum to 1 within 1e-9.
  static TransitionModel from_matrix(const HrGrid& grid, double mu, double sigma,
                                     TransitionMatrix matrix) {
    if (matrix.size() != grid.bin_count())
      throw ValidationError("transition matrix size does not match grid bin count");
    if (!(sigma >= kSigmaFloor)) throw ValidationError("transition sigma below floor 1e-4");
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      double sum = 0.0;
      for (double v : matrix.row(i)) {
        if (!(v >= 0.0) || !std::isfinite(v))
          throw ValidationError("transition row " + std::to_string(i) + " has a negative entry");
        sum += v;
      }
      if (std::abs(sum - 1.0) > kDistributionTolerance)
        throw ValidationError("transition row " + std::to_string(i) + " sums to " +
                              std::to_string(sum));
    }
    return TransitionModel(grid, mu, sigma, std::move(matrix));
  }

  const HrGrid& grid() const noexcept { return grid_; }
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  const TransitionMatrix& matrix() const noexcept { return matrix_; }

 private:
  TransitionModel(HrGrid grid, double mu, double sigma, TransitionMatrix m)
      : grid_(std::move(grid)), mu_(mu), sigma_(sigma), matrix_(std::move(m)) {}

  HrGrid grid_;
  double mu_;
  double sigma_;
  TransitionMatrix matrix_;
};

/// Text artifact: five header lines then c rows of c floats.
inline std::string save_transition(const TransitionModel& model) {
  const HrGrid& g = model.grid();
  std::string out;
  out += "bins=" + std::to_string(g.bin_count()) + "\n";
  out += "y_min=" + io::format_double(g.y_min()) + "\n";
  out += "y_max=" + io::format_double(g.y_max()) + "\n";
  out += "mu=" + io::format_double(model.mu()) + "\n";
  out += "sigma=" + io::format_double(model.sigma()) + "\n";
  for (std::size_t i = 0; i < g.bin_count(); ++i) {
    for (std::size_t j = 0; j < g.bin_count(); ++j) {
      if (j) out += ' ';
      out += io::format_double(model.matrix()(i, j));
    }
    out += '\n';
  }
  return out;
}

/// Parses a transition artifact. When `expected` is given the header grid must match it.
inline TransitionModel load_transition(const std::string& text, const std::string& source = "transition",
                                       const HrGrid* expected = nullptr) {
  const auto all = io::lines(text);
  const char* keys[] = {"bins", "y_min", "y_max", "mu", "sigma"};
  double header[5] = {};
  for (std::size_t k = 0; k < 5; ++k) {
    if (k >= all.size()) throw FormatError(source, k + 1, "missing header line '" + std::string(keys[k]) + "='");
    const std::string& line = all[k];
    const std::string prefix = std::string(keys[k]) + "=";
    if (line.rfind(prefix, 0) != 0) throw FormatError(source, k + 1, "expected '" + prefix + "'");
    header[k] = io::parse_double(std::string_view(line).substr(prefix.size()), source, k + 1);
  }
  if (!(header[0] >= 2) || header[0] != std::floor(header[0]))
    throw FormatError(source, 1, "bins must be an integer >= 2");
  const auto c = static_cast<std::size_t>(header[0]);
  HrGrid grid = [&] {
    try {
      return HrGrid(c, header[1], header[2]);
    } catch (const ParameterError& e) {
      throw FormatError(source, 2, e.what());
    }
  }();
  if (expected && !(grid == *expected))
    throw FormatError(source, 1, "grid header (" + describe(grid) + ") does not match configured grid (" +
                                     describe(*expected) + ")");
  TransitionMatrix m(c);
  std::size_t row = 0;
  for (std::size_t n = 5; n < all.size(); ++n) {
    if (io::trim(all[n]).empty()) continue;
    const auto toks = io::tokens(all[n]);
    if (row >= c) throw FormatError(source, n + 1, "more than " + std::to_string(c) + " matrix rows");
    if (toks.size() != c)
      throw FormatError(source, n + 1, "row has " + std::to_string(toks.size()) + " values, bins=" +
                                           std::to_string(c));
    for (std::size_t j = 0; j < c; ++j) m(row, j) = io::parse_double(toks[j], source, n + 1);
    ++row;
  }
  if (row != c) throw FormatError(source, all.size(), "expected " + std::to_string(c) + " matrix rows, got " + std::to_string(row));
  return TransitionModel::from_matrix(grid, header[3], header[4], std::move(m));
}

}  // namespace beliefhr
