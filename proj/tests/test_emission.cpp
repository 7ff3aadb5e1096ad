#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "beliefhr/emission.hpp"
#include "session_fixtures.hpp"

namespace beliefhr {
namespace {

const HrGrid kGrid;

SignalWindow blank_window() {
  SignalWindow w;
  w.sub_windows = 7;
  w.bins = 64;
  w.spectrogram.assign(7 * 64 * 2, 0.0);
  return w;
}

void set_bin(SignalWindow& w, std::size_t b, std::size_t ch, double v) {
  for (std::size_t s = 0; s < w.sub_windows; ++s) w.spec(s, b, ch) = v;
}

TEST(SpectralEmission, CleanToneNear90Bpm) {
  const auto s = fixtures::tone_session({1.5}, {}, 40.0, 64.0, 32.0, 0);
  for (const auto& w : make_windows(s)) {
    const auto d = spectral_emission(w, kGrid, SpectralParams{});
    EXPECT_EQ(d.mode(), 21u);
    EXPECT_NEAR(kGrid.center(d.mode()), 90.0, kGrid.bin_width());
  }
}

TEST(SpectralEmission, AccelSuppressionHandComputed) {
  SignalWindow w = blank_window();
  set_bin(w, 21, 0, 10.0);
  set_bin(w, 42, 0, 10.0);
  set_bin(w, 42, 1, 10.0);
  const auto d = spectral_emission(w, kGrid, SpectralParams{2.0, 1.0, 1e-6});
  const double eps = 1e-6;
  const double top = (1.0 + eps) * (1.0 + eps), rest = eps * eps;
  const double z = top + 63.0 * rest;
  EXPECT_EQ(d.mode(), 21u);
  EXPECT_NEAR(d[21], top / z, 1e-14);
  EXPECT_NEAR(d[42] / (rest / z), 1.0, 1e-9);

  // Without suppression the two peaks tie and the lower bin wins.
  EXPECT_NEAR(spectral_emission(w, kGrid, SpectralParams{2.0, 0.0, 1e-6})[42],
              spectral_emission(w, kGrid, SpectralParams{2.0, 0.0, 1e-6})[21], 1e-15);
}

TEST(SpectralEmission, AccelSuppressionEndToEnd) {
  const auto s = fixtures::tone_session({1.5, 2.5}, {2.5}, 40.0);
  for (const auto& w : make_windows(s)) EXPECT_EQ(spectral_emission(w, kGrid, SpectralParams{}).mode(), 21u);
}

TEST(SpectralEmission, AllZeroSpectrumIsUniform) {
  const auto d = spectral_emission(blank_window(), kGrid, SpectralParams{});
  for (double p : d.probs()) EXPECT_DOUBLE_EQ(p, 1.0 / 64.0);
}

TEST(SpectralEmission, ScaleInvariantAndMonotoneProperty) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    SignalWindow w = blank_window();
    for (double& v : w.spectrogram) v = u(rng);
    const auto base = spectral_emission(w, kGrid, SpectralParams{});
    SignalWindow scaled = w;
    for (double& v : scaled.spectrogram) v *= 37.5;
    const auto d2 = spectral_emission(scaled, kGrid, SpectralParams{});
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(d2[i], base[i], 1e-12);

    const std::size_t j = trial % 64;
    SignalWindow boosted = w;
    for (std::size_t s = 0; s < w.sub_windows; ++s) boosted.spec(s, j, 0) += 0.5;
    EXPECT_GE(spectral_emission(boosted, kGrid, SpectralParams{})[j], base[j]);
  }
}

TEST(SpectralEmission, SharpnessZeroIsUniform) {
  SignalWindow w = blank_window();
  set_bin(w, 5, 0, 1.0);
  const auto d = spectral_emission(w, kGrid, SpectralParams{0.0, 1.0, 1e-6});
  for (double p : d.probs()) EXPECT_DOUBLE_EQ(p, 1.0 / 64.0);
}

TEST(SpectralEmission, GridMisalignmentIsConfigError) {
  SignalWindow w = blank_window();
  set_bin(w, 5, 0, 1.0);
  EXPECT_THROW(spectral_emission(w, HrGrid(64, 40, 220), SpectralParams{}), ConfigError);
  SignalWindow bad = w;
  bad.bins = 63;
  EXPECT_THROW(spectral_emission(bad, kGrid, SpectralParams{}), ConfigError);
  EXPECT_THROW(spectral_emission(w, kGrid, SpectralParams{-1.0, 1.0, 1e-6}), ParameterError);
}

TEST(SpectralEmission, RebinsOntoOtherGrids) {
  const auto s = fixtures::tone_session({1.5}, {}, 40.0, 64.0, 32.0, 0);
  const auto w = make_windows(s);
  const HrGrid fine(128, 30, 210);
  const auto d = spectral_emission(w[0], fine, SpectralParams{});
  EXPECT_NEAR(fine.center(d.mode()), 90.0, 2.0 * fine.bin_width());
}

TEST(EmissionFile, RoundTripHundredRows) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EmissionSeries series{kGrid, 10.0, 2.0, {}};
  for (int k = 0; k < 100; ++k) {
    std::vector<double> w(64);
    for (double& v : w) v = u(rng);
    series.rows.push_back(BinDistribution::normalized(kGrid, w));
  }
  const auto back = load_emissions(save_emissions(series), "e", &kGrid);
  ASSERT_EQ(back.rows.size(), 100u);
  EXPECT_EQ(back.t0, 10.0);
  EXPECT_EQ(back.dt, 2.0);
  for (std::size_t k = 0; k < 100; ++k)
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(back.rows[k][i], series.rows[k][i], 1e-6);
}

std::string header(std::size_t bins) { return emission_header(HrGrid(bins, 30, 210), 10.0, 2.0); }

std::string row(std::size_t n, double each) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + io::format_double(each);
  return out + "\n";
}

TEST(EmissionFile, NonNormalizedRowReportsRow) {
  const std::string text = header(4) + row(4, 0.25) + row(4, 0.225);
  try {
    load_emissions(text, "e");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 7u);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(EmissionFile, ShortRowIsFormatError) {
  const std::string text = header(64) + row(63, 1.0 / 63.0);
  EXPECT_THROW(load_emissions(text, "e"), FormatError);
}

TEST(EmissionFile, MalformedFloatAndHeaderMismatch) {
  EXPECT_THROW(load_emissions(header(2) + "0.5 zero\n", "e"), FormatError);
  const HrGrid other(4, 30, 200);
  EXPECT_THROW(load_emissions(header(4) + row(4, 0.25), "e", &other), FormatError);
  EXPECT_THROW(load_emissions("bins=4\ny_min=30\n", "e"), FormatError);
  EXPECT_THROW(load_emissions(header(2) + "-0.5 1.5\n", "e"), FormatError);
}

TEST(EmissionFile, ToleranceIsOneInAMillion) {
  EXPECT_NO_THROW(load_emissions(header(2) + "0.5 0.5000009\n", "e"));
  EXPECT_THROW(load_emissions(header(2) + "0.5 0.500002\n", "e"), FormatError);
}

TEST(EmissionFile, StreamingReaderYieldsRowsInOrder) {
  std::istringstream in(header(2) + "0.1 0.9\n\n0.7 0.3\n");
  EmissionReader r(in, "e");
  EXPECT_DOUBLE_EQ((*r.next())[0], 0.1);
  EXPECT_DOUBLE_EQ((*r.next())[0], 0.7);
  EXPECT_FALSE(r.next().has_value());
  EXPECT_EQ(r.rows_read(), 2u);
}

TEST(FileEmissionSource, ReplaysRowsByWindowCenter) {
  const auto s = fixtures::tone_session({1.5}, {}, 40.0, 64.0, 32.0, 0);
  const auto windows = make_windows(s);
  EmissionSeries series{kGrid, 10.0, 2.0, {}};
  for (std::size_t k = 0; k < windows.size(); ++k) series.rows.push_back(BinDistribution::one_hot(kGrid, k));
  const FileEmissionSource src(series, 20.0);
  for (std::size_t k = 0; k < windows.size(); ++k) EXPECT_EQ(src.emit(windows[k]).mode(), k);
  series.rows.pop_back();
  const FileEmissionSource shorter(series, 20.0);
  EXPECT_THROW(shorter.emit(windows.back()), RangeError);
}

}  // namespace
}  // namespace beliefhr
