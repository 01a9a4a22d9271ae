#pragma once

// Randomized invariance checks shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lmstat/harness.hpp"
#include "lmstat/robinson.hpp"
#include "lmstat/stats.hpp"

namespace invariance {

struct Report {
  int cases = 0;
  int location_scale_failures = 0;
  int parseval_failures = 0;
  int worker_failures = 0;
  double worst_relative_change = 0.0;
  double worst_parseval_error = 0.0;
  std::string first_failure;
};

inline double relative_change(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); }

inline Report run(int cases, std::uint64_t seed, lmstat::nulldist::CriticalValues& critical,
                  double tolerance = 1e-7) {
  using namespace lmstat;
  Report rep;
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> length(64, 600);
  std::uniform_real_distribution<double> shift(-1e3, 1e3), log_scale(-3.0, 3.0), unit(0.0, 1.0);
  std::normal_distribution<double> z;
  for (int c = 0; c < cases; ++c) {
    ++rep.cases;
    const std::size_t n = length(gen);
    // Random AR(1) or random walk, so the inputs are not all white noise.
    const double phi = unit(gen) < 0.3 ? 1.0 : 2.0 * unit(gen) - 1.0;
    std::vector<double> x(n);
    double prev = 0.0;
    for (auto& v : x) prev = v = phi * prev + z(gen);
    const double a = shift(gen);
    const double b = (unit(gen) < 0.5 ? -1.0 : 1.0) * std::pow(10.0, log_scale(gen));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = a + b * x[i];

    const int s = 1 + static_cast<int>(unit(gen) * 10.0);
    double worst = 0.0;
    for (auto v : {stats::Variant::Q, stats::Variant::Qtilde}) {
      worst = std::max(worst, relative_change(stats::q_statistic(x, s, v).statistic,
                                              stats::q_statistic(y, s, v).statistic));
    }
    // Fractional differencing does not commute with a shift; r-tilde is
    // checked for scale only.
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = b * x[i];
    worst = std::max(worst, relative_change(robinson::robinson_statistic(x).r_tilde,
                                            robinson::robinson_statistic(scaled).r_tilde));
    rep.worst_relative_change = std::max(rep.worst_relative_change, worst);
    if (!(worst <= tolerance)) {
      ++rep.location_scale_failures;
      if (rep.first_failure.empty()) rep.first_failure = "location/scale case " + std::to_string(c);
    }

    const auto pg = robinson::full_periodogram(y);
    double total = 0.0, energy = 0.0;
    for (double p : pg) total += p;
    for (double v : y) energy += v * v;
    const double err = std::abs(total - energy) / energy;
    rep.worst_parseval_error = std::max(rep.worst_parseval_error, err);
    if (!(err <= 1e-10)) {
      ++rep.parseval_failures;
      if (rep.first_failure.empty()) rep.first_failure = "Parseval case " + std::to_string(c);
    }
  }

  // Worker-count determinism on a few small experiments.
  for (int k = 0; k < 4; ++k) {
    harness::McConfig cfg;
    cfg.dgp_grid = {dgp::DgpSpec{dgp::Farima{0.4, 0.0}}};
    cfg.d_grid = {0.5, 0.3};
    cfg.n_grid = {100};
    cfg.s_grid = {1, 4};
    cfg.tests = {harness::TestKind::Q, harness::TestKind::Qtilde, harness::TestKind::robinson};
    cfg.replications = 25;
    cfg.master_seed = seed + k;
    cfg.workers = 1;
    const auto base = harness::run_experiment(cfg, critical);
    for (unsigned w : {2u, 3u, 7u}) {
      cfg.workers = w;
      const auto other = harness::run_experiment(cfg, critical);
      if (harness::table_to_csv_string(other) != harness::table_to_csv_string(base)) {
        ++rep.worker_failures;
        if (rep.first_failure.empty()) rep.first_failure = "worker count " + std::to_string(w);
      }
    }
  }
  return rep;
}

}  // namespace invariance
