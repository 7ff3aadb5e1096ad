#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "beliefhr/transition.hpp"
#include "oracles.hpp"

namespace beliefhr {
namespace {

const HrGrid kGrid;

TEST(FitTransition, ConstantSequenceClampsSigma) {
  const auto fit = fit_transition({{60, 60, 60}});
  EXPECT_EQ(fit.mu, 0.0);
  EXPECT_EQ(fit.sigma, kSigmaFloor);
}

TEST(FitTransition, AlternatingSequence) {
  const auto fit = fit_transition({{60, 66, 60, 66, 60}});
  EXPECT_NEAR(fit.mu, 0.0, 1e-15);
  EXPECT_NEAR(fit.sigma, std::log(1.1), 1e-12);
  EXPECT_NEAR(fit.sigma, 0.09531, 1e-5);
}

TEST(FitTransition, PoolsAcrossSequences) {
  // Pairs: ln(2), ln(1/2), ln(3) -> mean ln(3)/3.
  const auto fit = fit_transition({{10, 20, 10}, {5}, {1, 3}});
  EXPECT_NEAR(fit.mu, std::log(3.0) / 3.0, 1e-15);
}

TEST(FitTransition, RecoversMonteCarloParameters) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> step(0.001, 0.02);
  std::vector<double> seq{80.0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) seq.push_back(seq.back() * std::exp(step(rng)));
  const auto fit = fit_transition({seq});
  EXPECT_NEAR(fit.sigma, 0.02, 0.02 * 0.02);
  // The sampling error of the mean is 0.02 / sqrt(n), about 6% of 0.001.
  EXPECT_NEAR(fit.mu, 0.001, 4.0 * 0.02 / std::sqrt(static_cast<double>(n)));
}

TEST(FitTransition, Errors) {
  EXPECT_THROW(fit_transition({}), InsufficientDataError);
  EXPECT_THROW(fit_transition({{70}, {80}}), InsufficientDataError);
  EXPECT_THROW(fit_transition({{70, 0, 80}}), DomainError);
  EXPECT_THROW(fit_transition({{70, -3}}), DomainError);
}

TEST(DiscretizeTransition, VanishingSigmaLimit) {
  // Neighbouring bins share a ratio bound of exactly 1, so as sigma -> 0 each
  // neighbour keeps Phi(0) = 1/2 of raw mass next to the self-transition's 1.
  const auto m = discretize_transition(0.0, 1e-6, kGrid);
  for (std::size_t i = 0; i < 64; ++i) {
    const bool edge = i == 0 || i == 63;
    const double self = edge ? 2.0 / 3.0 : 0.5, side = edge ? 1.0 / 3.0 : 0.25;
    for (std::size_t j = 0; j < 64; ++j) {
      const double expected = j == i ? self : (j + 1 == i || i + 1 == j) ? side : 0.0;
      EXPECT_NEAR(m(i, j), expected, 1e-9) << i << "," << j;
    }
  }
}

TEST(DiscretizeTransition, DiagonalDominatesAsSigmaVanishes) {
  for (double sigma : {1e-6, 1e-4, 1e-3}) {
    const auto m = discretize_transition(0.0, sigma, kGrid);
    for (std::size_t i = 0; i < 64; ++i)
      for (std::size_t j = 0; j < 64; ++j) {
        if (j != i) {
          EXPECT_LT(m(i, j), m(i, i));
        }
      }
  }
}

TEST(DiscretizeTransition, SelfTransitionDominatesRawKernel) {
  const auto raw = raw_transition_kernel(0.0, 0.05, kGrid);
  for (std::size_t i = 0; i < 64; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < 64; ++j)
      if (raw(i, j) > raw(i, best)) best = j;
    EXPECT_EQ(best, i);
  }
}

TEST(DiscretizeTransition, ThreeBinRowsMatchQuadrature) {
  const HrGrid g(3, 30, 210);
  const double mu = 0.0, sigma = 0.1;
  const auto raw = raw_transition_kernel(mu, sigma, g);
  const auto m = discretize_transition(mu, sigma, g);
  for (std::size_t i = 0; i < 3; ++i) {
    double q[3], sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      q[j] = oracle::ratio_mass(g.lower(j) / g.upper(i), g.upper(j) / g.lower(i), mu, sigma);
      EXPECT_NEAR(raw(i, j), q[j], 1e-6) << i << "," << j;
      sum += q[j];
    }
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(m(i, j), q[j] / sum, 1e-6);
  }
}

TEST(DiscretizeTransition, RejectsNonPositiveSigma) {
  EXPECT_THROW(discretize_transition(0.0, 0.0, kGrid), ParameterError);
  EXPECT_THROW(discretize_transition(0.0, -0.1, kGrid), ParameterError);
}

TEST(DiscretizeTransition, RowStochasticProperty) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> mu(-0.05, 0.05), lsig(std::log(1e-4), std::log(0.5));
  std::uniform_int_distribution<std::size_t> bins(2, 128);
  for (int trial = 0; trial < 50; ++trial) {
    const HrGrid g(bins(rng), 30, 210);
    const auto m = discretize_transition(mu(rng), std::exp(lsig(rng)), g);
    for (std::size_t i = 0; i < g.bin_count(); ++i) {
      double s = 0.0;
      for (double v : m.row(i)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(DiscretizeTransition, DiagonalShrinksWithSigma) {
  const double sigmas[] = {0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2};
  for (std::size_t i = 8; i < 56; ++i) {
    double prev = 2.0;
    for (double s : sigmas) {
      const double d = discretize_transition(0.0, s, kGrid)(i, i);
      EXPECT_LE(d, prev + 1e-12) << "row " << i << " sigma " << s;
      prev = d;
    }
  }
}

TEST(DiscretizeTransition, RawKernelSymmetricForZeroMean) {
  const HrGrid g(6, 30, 210);
  const auto raw = raw_transition_kernel(0.0, 0.3, g);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_NEAR(raw(i, j), raw(j, i), 1e-12);
      // Swapped ratio bounds of (j, i), integrated independently.
      const double q = oracle::ratio_mass(g.lower(i) / g.upper(j), g.upper(i) / g.lower(j), 0.0, 0.3);
      EXPECT_NEAR(raw(i, j), q, 1e-6);
    }
  }
}

TEST(TransitionArtifact, RoundTrip) {
  const auto model = TransitionModel::from_parameters(kGrid, 0.0013, 0.021);
  const auto back = load_transition(save_transition(model), "t", &kGrid);
  EXPECT_NEAR(back.mu(), model.mu(), 1e-12);
  EXPECT_NEAR(back.sigma(), model.sigma(), 1e-12);
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(back.matrix()(i, j), model.matrix()(i, j), 1e-12);
}

TEST(TransitionArtifact, RowLengthMismatchIsFormatError) {
  const auto model = TransitionModel::from_parameters(HrGrid(3, 30, 210), 0.0, 0.1);
  std::string text = save_transition(model);
  text.replace(text.find("bins=3"), 6, "bins=4");
  try {
    load_transition(text, "t");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
}

TEST(TransitionArtifact, NonStochasticRowIsValidationError) {
  const std::string text = "bins=2\ny_min=30\ny_max=210\nmu=0\nsigma=0.1\n0.25 0.25\n0.5 0.5\n";
  EXPECT_THROW(load_transition(text, "t"), ValidationError);
}

TEST(TransitionArtifact, GridHeaderMismatch) {
  const auto model = TransitionModel::from_parameters(HrGrid(3, 30, 210), 0.0, 0.1);
  const HrGrid other(3, 40, 210);
  EXPECT_THROW(load_transition(save_transition(model), "t", &other), FormatError);
}

TEST(TransitionArtifact, MalformedFloatReportsLine) {
  const std::string text = "bins=2\ny_min=30\ny_max=210\nmu=0\nsigma=0.1\n0.5 0.5\n0.5 x\n";
  try {
    load_transition(text, "t");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
}

}  // namespace
}  // namespace beliefhr
