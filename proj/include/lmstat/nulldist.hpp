#pragma once

// Law of sum_i psi_i Q_i with Q_i i.i.d. chi-square(1): CDF and quantiles.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "lmstat/kernel.hpp"

namespace lmstat::nulldist {

enum class Method { cf_inversion, monte_carlo };

std::string_view to_string(Method m) noexcept;

/// Draws per Monte Carlo batch. Batch b uses stream derive_stream(seed, b).
inline constexpr std::size_t kBatchSize = 1 << 16;

class NullDistribution {
 public:
  /// For the monte-carlo method the seeded sample is drawn eagerly.
  explicit NullDistribution(kernel::EigenSpectrum spectrum, Method method = Method::cf_inversion,
                            std::size_t mc_draws = 1'000'000, std::uint64_t seed = 1);

  const kernel::EigenSpectrum& spectrum() const noexcept { return spectrum_; }
  Method method() const noexcept { return method_; }
  std::size_t mc_draws() const noexcept { return mc_draws_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double mean() const noexcept;
  double variance() const noexcept;

  /// Sorted Monte Carlo sample; empty for cf-inversion.
  std::span<const double> sample() const noexcept;

 private:
  kernel::EigenSpectrum spectrum_;
  Method method_;
  std::size_t mc_draws_;
  std::uint64_t seed_;
  std::shared_ptr<const std::vector<double>> sample_;
};

struct CdfValue {
  double probability = 0.0;
  /// Set when characteristic-function inversion failed and the value comes
  /// from a Monte Carlo sample instead.
  bool fell_back_to_monte_carlo = false;
};

/// P(sum psi_i Q_i <= x).
CdfValue null_cdf(const NullDistribution& dist, double x);

/// alpha-quantile. Throws DomainError unless 0 < alpha < 1, ConvergenceError
/// when the bisection bracket does not contain the quantile.
double critical_value(const NullDistribution& dist, double alpha);

/// Imhof inversion of the characteristic function. Sets `converged` to false
/// when the truncation criterion was not met within the panel budget.
double imhof_cdf(std::span<const double> weights, double x, bool& converged, double tol = 1e-11);

/// Sorted sample of `draws` values of sum psi_i Z_i^2, deterministic in
/// (weights, draws, seed) regardless of `threads`.
std::vector<double> monte_carlo_sample(std::span<const double> weights, std::size_t draws,
                                       std::uint64_t seed, unsigned threads = 0);

/// Thread-safe provider of normalized-log spectra and cf-inversion quantiles
/// q(alpha, s), memoized in memory and persisted through the disk cache.
class CriticalValues {
 public:
  struct Options {
    int resolution = 2048;
    /// Disengaged: memory-only.
    std::optional<std::filesystem::path> cache_dir;
  };

  explicit CriticalValues(Options opts);

  int resolution() const noexcept { return opts_.resolution; }
  const std::optional<std::filesystem::path>& cache_dir() const noexcept { return opts_.cache_dir; }

  kernel::EigenSpectrum spectrum(int s);
  double quantile(int s, double alpha);

 private:
  Options opts_;
  std::mutex mutex_;
  std::map<int, kernel::EigenSpectrum> spectra_;
  std::map<std::pair<int, double>, double> quantiles_;
};

/// Process-wide provider at the default resolution using the default cache
/// directory.
CriticalValues& default_critical_values();

}  // namespace lmstat::nulldist
