#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <boost/math/special_functions/zeta.hpp>

#include "lmstat/dgp.hpp"
#include "lmstat/error.hpp"
#include "lmstat/rng.hpp"
#include "support.hpp"

namespace {

using namespace lmstat;
using namespace lmstat::dgp;

double mean_of(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double sample_acf(const std::vector<double>& x, std::size_t h) {
  const double m = mean_of(x);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    den += (x[t] - m) * (x[t] - m);
    if (t + h < x.size()) num += (x[t] - m) * (x[t + h] - m);
  }
  return num / den;
}

TEST(FarimaAcf, ClosedForms) {
  EXPECT_DOUBLE_EQ(farima_acf(0.0, 0), 1.0);
  EXPECT_DOUBLE_EQ(farima_acf(0.0, 3), 0.0);
  EXPECT_NEAR(farima_acf(0.3, 0), std::tgamma(0.4) / std::pow(std::tgamma(0.7), 2), 1e-14);
  EXPECT_NEAR(farima_acf(0.3, 0), 1.3164, 1e-4);
  EXPECT_NEAR(farima_acf(0.3, 1) / farima_acf(0.3, 0), 0.3 / 0.7, 1e-14);
  EXPECT_NEAR(farima_acf(-0.5, 0), 4.0 / oracle::kPi, 1e-14);
}

TEST(FarimaAcf, MatchesGammaRatio) {
  for (double d : {-0.5, -0.3, 0.1, 0.3, 0.45}) {
    for (std::size_t h : {0u, 1u, 2u, 7u, 50u, 1000u}) {
      const double expected = oracle::farima_acf(d, h);
      EXPECT_NEAR(farima_acf(d, h), expected, 1e-11 * std::abs(expected)) << d << " " << h;
    }
    const auto v = farima_acf_vector(d, 60);
    for (std::size_t h = 0; h < 60; ++h) EXPECT_NEAR(v[h], farima_acf(d, h), 1e-13 * std::abs(v[h]));
  }
}

TEST(FarimaAcf, HyperbolicDecay) {
  const double d = 0.3;
  const double c = std::tgamma(1.0 - 2.0 * d) / (std::tgamma(d) * std::tgamma(1.0 - d));
  EXPECT_NEAR(farima_acf(d, 10'000) / (c * std::pow(10'000.0, 2.0 * d - 1.0)), 1.0, 0.02);
}

TEST(FarimaAcf, Domain) {
  EXPECT_THROW(farima_acf(0.5, 1), DomainError);
  EXPECT_THROW(farima_acf(-0.6, 1), DomainError);
}

TEST(PartialSumVariance, DirectDoubleSum) {
  for (double d : {-0.5, -0.2, 0.0, 0.3}) {
    const std::size_t n = 60;
    double direct = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) direct += oracle::farima_acf(d, i > j ? i - j : j - i);
    }
    EXPECT_NEAR(partial_sum_variance(d, n), direct, 1e-10 * std::abs(direct)) << d;
  }
  EXPECT_DOUBLE_EQ(partial_sum_variance(0.0, 1000), 1000.0);
}

TEST(PartialSumVariance, AntipersistentLogGrowth) {
  // Independent values from the moving-average representation of the sum.
  const auto ratio = [](std::size_t n) {
    return partial_sum_variance(-0.5, n) / ((2.0 / oracle::kPi) * std::log(static_cast<double>(n)));
  };
  EXPECT_NEAR(ratio(100'000), 1.17055, 1e-4);
  EXPECT_NEAR(ratio(1'000'000), 1.14212, 1e-4);
}

TEST(PredictionVariances, PositiveAndDecreasing) {
  for (double d : {-0.5, -0.4, -0.2, 0.2, 0.4, 0.49}) {
    const auto v = prediction_variances(d, 4096);
    for (std::size_t t = 1; t < v.size(); ++t) {
      ASSERT_GT(v[t], 0.0) << d << " " << t;
      ASSERT_LE(v[t], v[t - 1] * (1.0 + 1e-12));
    }
  }
}

TEST(PredictionVariances, LongHorizon) {
  for (double d : {-0.5, 0.49}) {
    const auto v = prediction_variances(d, 1u << 16);
    EXPECT_GT(v.back(), 0.0);
  }
}

TEST(FarimaSimulation, WhiteNoiseVariance) {
  Engine rng = make_engine(3);
  const auto x = farima_stationary(0.0, 20'000, rng);
  double ss = 0.0;
  for (double v : x) ss += v * v;
  EXPECT_NEAR(ss / x.size(), 1.0, 3.0 * std::sqrt(2.0 / x.size()));
}

TEST(FarimaSimulation, SecondMomentsMatchAcf) {
  const double d = 0.3;
  const std::size_t n = 4096;
  const int reps = 500;
  std::vector<double> g0(reps), g1(reps);
  for (int r = 0; r < reps; ++r) {
    Engine rng = make_stream(4, r);
    const auto x = farima_stationary(d, n, rng);
    double a = 0.0, b = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      a += x[t] * x[t];
      if (t + 1 < n) b += x[t] * x[t + 1];
    }
    g0[r] = a / n;
    g1[r] = b / (n - 1);
  }
  const auto check = [&](const std::vector<double>& v, double target) {
    const double m = mean_of(v);
    double var = 0.0;
    for (double e : v) var += (e - m) * (e - m);
    var /= (v.size() - 1);
    EXPECT_NEAR(m, target, 3.0 * std::sqrt(var / v.size()));
  };
  check(g0, farima_acf(d, 0));
  check(g1, farima_acf(d, 1));
  EXPECT_NEAR(mean_of(g1) / mean_of(g0), 0.3 / 0.7, 0.01);
}

TEST(FarimaSimulation, RandomWalkVarianceGrowth) {
  const std::size_t n = 1000;
  const int reps = 500;
  std::vector<double> v(reps);
  for (int r = 0; r < reps; ++r) {
    const auto x = simulate(DgpSpec{Farima{1.0, 0.0}, n, derive_stream(5, r)});
    v[r] = x.back() * x.back() / n;
  }
  // X_n^2 / n is chi-square(1): mean 1, sd sqrt(2).
  EXPECT_NEAR(mean_of(v), 1.0, 3.0 * std::sqrt(2.0 / reps));
}

TEST(FarimaSimulation, IntegratedDifferencesAreStationarySample) {
  for (double phi : {0.0, 0.4}) {
    const DgpSpec integrated{Farima{0.7, phi}, 800, 17};
    const DgpSpec stationary{Farima{-0.3, phi}, 800, 17};
    const auto x = simulate(integrated);
    const auto y = simulate(stationary);
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    EXPECT_NEAR(x[0], y[0], 1e-13 * scale);
    for (std::size_t t = 1; t < x.size(); ++t) EXPECT_NEAR(x[t] - x[t - 1], y[t], 1e-13 * scale);
  }
}

TEST(FarimaSimulation, ArComponent) {
  const auto x = simulate(DgpSpec{Farima{0.0, 0.6}, 20'000, 6});
  EXPECT_NEAR(sample_acf(x, 1), 0.6, 0.03);
  EXPECT_NEAR(sample_acf(x, 2), 0.36, 0.03);
}

TEST(Simulation, Deterministic) {
  const std::vector<DgpSpec> specs{
      {Farima{0.3, 0.2}, 300, 9}, {Aggregated{1.0, 1.5, 50}, 300, 9}, {Renewal{0.5, 0.5, 3.5}, 300, 9},
      {Break{0.2, 2.0, std::nullopt}, 300, 9}};
  for (const auto& s : specs) {
    const auto a = simulate(s);
    EXPECT_EQ(a.size(), 300u);
    EXPECT_EQ(a, simulate(s));
    auto other = s;
    other.seed = 10;
    EXPECT_NE(a, simulate(other));
  }
}

TEST(Aggregated, StationaryVariance) {
  // E[1/(1 - phi^2)] = (a + b - 1)/(b - 1) = 3 for a = 1, b = 1.5.
  const int reps = 200;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto x = simulate(DgpSpec{Aggregated{1.0, 1.5, 1000}, 4096, derive_stream(7, r)});
    double ss = 0.0;
    for (double v : x) ss += v * v;
    total += ss / x.size();
  }
  EXPECT_NEAR(total / reps, 3.0, 0.3);
}

TEST(Aggregated, SinglePanelIsAr1) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = simulate(DgpSpec{Aggregated{2.0, 2.0, 1}, 20'000, seed});
    const double r1 = sample_acf(x, 1);
    EXPECT_NEAR(sample_acf(x, 2), r1 * r1, 0.05) << seed;
  }
}

TEST(Aggregated, DomainAndImpliedMemory) {
  EXPECT_DOUBLE_EQ((Aggregated{1.0, 1.5, 10}.implied_d()), 0.25);
  EXPECT_THROW(simulate(DgpSpec{Aggregated{1.0, 1.0, 10}, 100}), DomainError);
  EXPECT_THROW(simulate(DgpSpec{Aggregated{0.0, 1.5, 10}, 100}), DomainError);
  EXPECT_THROW(simulate(DgpSpec{Aggregated{1.0, 1.5, 0}, 100}), DomainError);
}

TEST(DurationSampler, ZetaLaw) {
  const DurationSampler s(3.5);
  const double z = boost::math::zeta(3.5);
  EXPECT_NEAR(s.survival(0), 1.0, 1e-12);
  EXPECT_NEAR(1.0 - s.survival(1), 1.0 / z, 1e-12);
  EXPECT_NEAR(s.survival(1) - s.survival(2), std::pow(2.0, -3.5) / z, 1e-12);
  double mean = 0.0;
  for (std::size_t k = 0; k <= DurationSampler::kTableSize; ++k) mean += s.survival(k);
  // Remaining tail sum_{k > K} P(Delta > k), of order K^(2 - alpha).
  EXPECT_NEAR(mean, boost::math::zeta(2.5) / z, 1e-6);
  EXPECT_NEAR(boost::math::zeta(2.5) / z, 1.19060, 1e-5);
}

TEST(DurationSampler, SampleMean) {
  const DurationSampler s(3.5);
  Engine rng = make_engine(12);
  const std::size_t draws = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double v = static_cast<double>(s(rng));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  const double z = boost::math::zeta(3.5);
  EXPECT_NEAR(mean, boost::math::zeta(2.5) / z, 4.0 * std::sqrt(var / draws));
}

TEST(DurationSampler, InverseSurvival) {
  const DurationSampler s(3.2);
  EXPECT_EQ(s.quantile_from_tail(1.0), 1u);
  for (double q : {0.5, 0.1, 1e-3, 1e-6, 1e-12}) {
    const std::size_t k = s.quantile_from_tail(q);
    EXPECT_LE(s.survival(k), q * (1.0 + 1e-9)) << q;
    if (k > 1 && k <= DurationSampler::kTableSize) {
      EXPECT_GT(s.survival(k - 1), q) << q;
    }
  }
  EXPECT_THROW(s.quantile_from_tail(0.0), DomainError);
}

TEST(Renewal, PureAutoregressionLimit) {
  const auto x = simulate(DgpSpec{Renewal{0.5, 1e-9, 3.5}, 20'000, 13});
  EXPECT_NEAR(sample_acf(x, 1), 0.5, 0.03);
}

TEST(Renewal, CovarianceDecayExponent) {
  // Leading covariance term: both ends of the lag window inside one unit-root
  // regime, sum_{k >= h} P(Delta = k) (k - h + 1)(k - h + 2) / 2, evaluated
  // from the sampler's own duration law. It decays like h^(3 - alpha).
  for (double alpha : {3.1, 3.5}) {
    const DurationSampler s(alpha);
    const auto leading = [&](std::size_t h) {
      long double total = 0.0L;
      for (std::size_t k = h; k < 4'000'000; ++k) {
        const long double mass = s.survival(k - 1) - s.survival(k);
        total += mass * static_cast<long double>(k - h + 1) * static_cast<long double>(k - h + 2) / 2.0L;
      }
      return static_cast<double>(total);
    };
    const double slope = std::log(leading(100) / leading(10)) / std::log(10.0);
    EXPECT_NEAR(slope, 3.0 - alpha, 0.4) << alpha;
  }
}

TEST(Renewal, LagOneCorrelationBetweenRegimes) {
  // Unit-root regimes raise the lag-one correlation above the contracting
  // coefficient c.
  const auto x = simulate(DgpSpec{Renewal{0.5, 0.5, 3.5}, 100'000, 15});
  const double r1 = sample_acf(x, 1);
  EXPECT_GT(r1, 0.5);
  EXPECT_LT(r1, 1.0);
}

TEST(Renewal, Domain) {
  EXPECT_THROW(simulate(DgpSpec{Renewal{0.5, 0.5, 4.0}, 100}), DomainError);
  EXPECT_THROW(simulate(DgpSpec{Renewal{1.0, 0.5, 3.5}, 100}), DomainError);
  EXPECT_THROW(simulate(DgpSpec{Renewal{0.5, 0.0, 3.5}, 100}), DomainError);
}

TEST(Break, ZeroShiftIsFarima) {
  EXPECT_EQ(simulate(DgpSpec{Break{0.2, 0.0, std::nullopt}, 500, 3}), simulate(DgpSpec{Farima{0.2, 0.0}, 500, 3}));
}

TEST(Break, ShiftAfterMidpoint) {
  for (std::size_t n : {500u, 501u}) {
    const auto base = simulate(DgpSpec{Farima{0.2, 0.0}, n, 3});
    const auto shifted = simulate(DgpSpec{Break{0.2, 2.0, std::nullopt}, n, 3});
    for (std::size_t t = 1; t <= n; ++t) {
      const double expected = t > n / 2 ? 2.0 : 0.0;
      EXPECT_NEAR(shifted[t - 1] - base[t - 1], expected, 1e-12) << t;
    }
  }
}

TEST(Break, ScaledTrend) {
  const std::size_t n = 400;
  const auto base = simulate(DgpSpec{Farima{0.1, 0.0}, n, 4});
  const auto trended = simulate(DgpSpec{Break{0.1, 0.0, Trend{0.5, {0.0, 1.0}}}, n, 4});
  for (std::size_t t = 1; t <= n; ++t) {
    EXPECT_NEAR(trended[t - 1] - base[t - 1], std::sqrt(400.0) * t / 400.0, 1e-9);
  }
  EXPECT_DOUBLE_EQ((Trend{0.0, {0.0, 2.0, 0.0}}(0.25)), 1.0);
}

TEST(Spec, JsonRoundTrip) {
  const std::vector<DgpSpec> specs{{Farima{1.2, -0.3}, 64, 5, 10},
                                   {Aggregated{2.0, 1.8, 30}, 64, 6, 0},
                                   {Renewal{0.3, 0.7, 3.3}, 64, 7, 20},
                                   {Break{0.1, 1.5, std::nullopt}, 64, 8, 0},
                                   {Break{0.1, 0.0, Trend{0.3, {0.0, 1.0, 0.5}}}, 64, 8, 0}};
  for (const auto& s : specs) {
    const auto back = dgp_from_json(to_json(s));
    EXPECT_EQ(to_json(back), to_json(s));
    EXPECT_EQ(simulate(back), simulate(s));
  }
}

TEST(Spec, JsonValidation) {
  EXPECT_THROW(dgp_from_json(nlohmann::json::parse(R"({"kind":"farima","d":0.3,"c":1})")), ValidationError);
  EXPECT_THROW(dgp_from_json(nlohmann::json::parse(R"({"kind":"arma"})")), ValidationError);
  EXPECT_THROW(dgp_from_json(nlohmann::json::parse(R"({"d":0.3})")), ValidationError);
  EXPECT_THROW(dgp_from_json(nlohmann::json::parse(R"({"kind":"farima","d":"x"})")), ValidationError);
  EXPECT_THROW(dgp_from_json(nlohmann::json::parse(R"({"kind":"farima","d":1.5})")), DomainError);
  EXPECT_THROW(dgp_from_json(nlohmann::json::parse(R"({"kind":"farima","n":8})")), DomainError);
}

TEST(Spec, NamesAndDescriptions) {
  for (auto k : {Kind::farima, Kind::aggregated, Kind::renewal, Kind::structural_break}) {
    EXPECT_EQ(parse_kind(to_string(k)), k);
  }
  EXPECT_EQ(to_string(Kind::structural_break), "break");
  EXPECT_EQ((DgpSpec{Renewal{0.5, 0.25, 3.5}}.describe_params()), "c=0.5;p=0.25;alpha=3.5");
  EXPECT_EQ((DgpSpec{Farima{0.3, 0.0}}.memory()), 0.3);
  EXPECT_FALSE((DgpSpec{Renewal{}}.memory()));
}

}  // namespace
