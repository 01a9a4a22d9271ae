#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "lmstat/error.hpp"
#include "lmstat/nulldist.hpp"
#include "support.hpp"

namespace {

using namespace lmstat;
using namespace lmstat::nulldist;

// q(0.05, 10) from 10^6 Monte Carlo draws with seed 1.
constexpr double kTenFrequencyMonteCarlo = 0.95529244696753512;

NullDistribution dist_of(std::vector<double> w, Method m = Method::cf_inversion, std::size_t draws = 200'000) {
  return NullDistribution(kernel::EigenSpectrum{std::move(w)}, m, draws, 1);
}

CriticalValues& shared_values() {
  static CriticalValues cv(CriticalValues::Options{2048, std::nullopt});
  return cv;
}

TEST(NullCdf, SingleChiSquare) {
  const boost::math::chi_squared chi1(1.0);
  const auto dist = dist_of({1.0});
  for (double x : {0.01, 0.5, 1.0, 3.841, 8.0}) {
    EXPECT_NEAR(null_cdf(dist, x).probability, boost::math::cdf(chi1, x), 1e-8) << x;
  }
  EXPECT_NEAR(null_cdf(dist, 3.841).probability, 0.95, 1e-4);
}

TEST(NullCdf, NonPositiveArgument) {
  const auto dist = dist_of({1.0, 0.5});
  EXPECT_EQ(null_cdf(dist, 0.0).probability, 0.0);
  EXPECT_EQ(null_cdf(dist, -1.0).probability, 0.0);
}

TEST(NullCdf, EqualWeightsGiveChiSquareTwo) {
  const auto dist = dist_of({1.0, 1.0});
  EXPECT_NEAR(critical_value(dist, 0.5), 2.0 * std::log(2.0), 1e-7);
  EXPECT_NEAR(null_cdf(dist, 3.0).probability, 1.0 - std::exp(-1.5), 1e-9);
}

TEST(NullCdf, ZeroWeightsAreIgnored) {
  const boost::math::chi_squared chi1(1.0);
  const auto dist = dist_of({1.0, 0.0, 0.0});
  EXPECT_NEAR(critical_value(dist, 0.05), boost::math::quantile(chi1, 0.05), 1e-7);
  EXPECT_NEAR(critical_value(dist, 0.05), 0.0039321, 1e-6);
}

TEST(NullCdf, MonotoneInArgument) {
  const auto dist = NullDistribution(shared_values().spectrum(5));
  double prev = 0.0;
  for (double x = 0.05; x < 12.0; x += 0.05) {
    const double p = null_cdf(dist, x).probability;
    EXPECT_GE(p, prev - 1e-12) << x;
    prev = p;
  }
  EXPECT_GT(prev, 0.99);
}

TEST(NullCdf, AgreesWithMonteCarloSample) {
  const auto sp = shared_values().spectrum(10);
  const auto cf = NullDistribution(sp);
  const auto mc = NullDistribution(sp, Method::monte_carlo, 400'000, 3);
  for (double x : {0.8, 1.2, 2.0, 3.0}) {
    const double p = null_cdf(mc, x).probability;
    const double se = std::sqrt(p * (1.0 - p) / 400'000.0);
    EXPECT_NEAR(null_cdf(cf, x).probability, p, 4.0 * se + 1e-6) << x;
  }
}

TEST(CriticalValue, ScaleEquivariance) {
  const auto sp = shared_values().spectrum(3);
  auto scaled = sp;
  for (auto& w : scaled.weights) w *= 2.5;
  for (double alpha : {0.01, 0.05, 0.1}) {
    const double q = critical_value(NullDistribution(sp), alpha);
    EXPECT_NEAR(critical_value(NullDistribution(scaled), alpha), 2.5 * q, 1e-7 * q + 1e-7);
    const double qm = critical_value(NullDistribution(sp, Method::monte_carlo, 50'000, 9), alpha);
    EXPECT_NEAR(critical_value(NullDistribution(scaled, Method::monte_carlo, 50'000, 9), alpha), 2.5 * qm, 1e-12);
  }
}

TEST(CriticalValue, IncreasingInAlpha) {
  const auto dist = NullDistribution(shared_values().spectrum(2));
  double prev = 0.0;
  for (double alpha : {0.001, 0.01, 0.05, 0.1, 0.5, 0.9}) {
    const double q = critical_value(dist, alpha);
    EXPECT_GT(q, prev);
    prev = q;
  }
}

TEST(CriticalValue, RejectsBadAlpha) {
  const auto dist = dist_of({1.0});
  EXPECT_THROW(critical_value(dist, 0.0), DomainError);
  EXPECT_THROW(critical_value(dist, 1.0), DomainError);
  EXPECT_THROW(critical_value(dist, std::nan("")), DomainError);
}

TEST(CriticalValue, TenFrequencyRegression) {
  // cf-inversion value, and the 10^6-draw seed-1 Monte Carlo value.
  const auto sp = shared_values().spectrum(10);
  EXPECT_NEAR(critical_value(NullDistribution(sp), 0.05), 0.9563262374, 1e-6);
  const double mc = critical_value(NullDistribution(sp, Method::monte_carlo, 1'000'000, 1), 0.05);
  EXPECT_NEAR(mc, kTenFrequencyMonteCarlo, 1e-9);
  EXPECT_NEAR(mc, 0.9563262374, 0.01 * 0.9563262374);
}

TEST(NullDistribution, RejectsBadSpectra) {
  EXPECT_THROW(dist_of({}), DomainError);
  EXPECT_THROW(dist_of({1.0, -0.1}), DomainError);
  EXPECT_THROW(dist_of({1.0, INFINITY}), DomainError);
  EXPECT_THROW(dist_of({1.0}, Method::monte_carlo, 0), DomainError);
}

TEST(NullDistribution, Moments) {
  const auto dist = dist_of({1.0, 0.5, 0.25});
  EXPECT_DOUBLE_EQ(dist.mean(), 1.75);
  EXPECT_DOUBLE_EQ(dist.variance(), 2.0 * (1.0 + 0.25 + 0.0625));
}

TEST(MonteCarlo, SampleMomentsMatch) {
  const auto sp = shared_values().spectrum(10);
  const std::size_t draws = 400'000;
  const auto sample = monte_carlo_sample(sp.weights, draws, 5);
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / draws;
  double m2 = 0.0, m4 = 0.0;
  for (double v : sample) {
    m2 += (v - mean) * (v - mean);
  }
  const double var = m2 / (draws - 1);
  for (double v : sample) m4 += std::pow(v - mean, 4);
  m4 /= draws;
  const double mu = std::accumulate(sp.weights.begin(), sp.weights.end(), 0.0);
  double sigma2 = 0.0;
  for (double w : sp.weights) sigma2 += 2.0 * w * w;
  EXPECT_NEAR(mean, mu, 3.0 * std::sqrt(sigma2 / draws));
  EXPECT_NEAR(var, sigma2, 3.0 * std::sqrt((m4 - var * var) / draws));
}

TEST(MonteCarlo, IndependentOfThreadCount) {
  const std::vector<double> w{1.0, 0.4, 0.2};
  const std::size_t draws = 3 * kBatchSize + 17;
  EXPECT_EQ(monte_carlo_sample(w, draws, 42, 1), monte_carlo_sample(w, draws, 42, 4));
  EXPECT_NE(monte_carlo_sample(w, 100, 42, 1), monte_carlo_sample(w, 100, 43, 1));
}

TEST(MonteCarlo, MatchesIndependentSampler) {
  // Distribution-level agreement with a sampler built on a different engine.
  const std::vector<double> w{1.0, 0.3};
  const std::size_t draws = 200'000;
  const auto ours = monte_carlo_sample(w, draws, 8);
  std::mt19937 gen(99);
  std::normal_distribution<double> z;
  std::vector<double> ref(draws);
  for (auto& v : ref) {
    const double a = z(gen), b = z(gen);
    v = w[0] * a * a + w[1] * b * b;
  }
  std::sort(ref.begin(), ref.end());
  for (double p : {0.05, 0.5, 0.95}) {
    const auto k = static_cast<std::size_t>(p * draws);
    EXPECT_NEAR(ours[k], ref[k], 0.03 * ref[k]) << p;
  }
}

TEST(CriticalValues, MemoryOnlyMatchesDirectComputation) {
  CriticalValues cv(CriticalValues::Options{512, std::nullopt});
  const auto sp = cv.spectrum(2);
  EXPECT_EQ(sp.weights.size(), 5u);
  EXPECT_DOUBLE_EQ(cv.quantile(2, 0.05), critical_value(NullDistribution(sp), 0.05));
  EXPECT_THROW(cv.spectrum(0), DomainError);
  EXPECT_THROW(cv.quantile(2, 1.5), DomainError);
}

TEST(CriticalValues, PersistsToDisk) {
  const auto dir = std::filesystem::temp_directory_path() / ("lmstat_cv_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  double first = 0.0;
  {
    CriticalValues cv(CriticalValues::Options{512, dir});
    first = cv.quantile(3, 0.1);
  }
  EXPECT_FALSE(std::filesystem::is_empty(dir));
  CriticalValues again(CriticalValues::Options{512, dir});
  EXPECT_DOUBLE_EQ(again.quantile(3, 0.1), first);
  std::filesystem::remove_all(dir);
}

}  // namespace
