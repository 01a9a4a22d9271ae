#pragma once

// Seeded data-generating processes: FARIMA(p,d,0) with p <= 1, aggregated
// random-coefficient AR(1), renewal regime-switching AR(1) and a structural
// break in the mean.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmstat/rng.hpp"

namespace lmstat::dgp {

struct Farima {
  double d = 0.0;
  /// AR(1) coefficient.
  double phi = 0.0;
};

struct Aggregated {
  double a = 1.0;
  double b = 1.5;
  int panels = 1000;

  /// d = 1 - b/2.
  double implied_d() const noexcept { return 1.0 - b / 2.0; }
};

struct Renewal {
  double c = 0.5;
  double p = 0.5;
  double alpha = 3.5;
};

/// g sampled on an equispaced grid over [0, 1], linearly interpolated and
/// scaled by n^beta.
struct Trend {
  double beta = 0.0;
  std::vector<double> samples;

  double operator()(double u) const;
};

struct Break {
  double d = 0.0;
  double delta_break = 0.0;
  std::optional<Trend> trend;
};

enum class Kind { farima, aggregated, renewal, structural_break };

std::string_view to_string(Kind k) noexcept;
Kind parse_kind(std::string_view name);

using Params = std::variant<Farima, Aggregated, Renewal, Break>;

inline constexpr int kDefaultBurnIn = 1000;

struct DgpSpec {
  Params params;
  std::size_t n = 500;
  std::uint64_t seed = 1;
  int burn_in = kDefaultBurnIn;

  Kind kind() const noexcept;
  /// Memory parameter of the design, when it has one.
  std::optional<double> memory() const noexcept;
  /// Throws DomainError when a parameter lies outside its domain.
  void validate() const;
  /// Compact "name=value;..." rendering of the kind parameters.
  std::string describe_params() const;
};

nlohmann::json to_json(const DgpSpec& spec);
/// Throws ValidationError for malformed input and DomainError for bad values.
DgpSpec dgp_from_json(const nlohmann::json& j);

/// FARIMA(0,d,0) autocovariance at lag h for unit innovation variance,
/// d in [-1/2, 1/2).
double farima_acf(double d, std::size_t h);

/// gamma(0..count-1).
std::vector<double> farima_acf_vector(double d, std::size_t count);

/// Var(X_1 + ... + X_n) = sum_{|h|<n} (n - |h|) gamma(h).
double partial_sum_variance(double d, std::size_t n);

/// Durbin-Levinson one-step prediction variances v_0..v_{n-1}. Throws
/// ConvergenceError if one becomes nonpositive.
std::vector<double> prediction_variances(double d, std::size_t n);
/// Exact Gaussian FARIMA(0,d,0) sample, d in [-1/2, 1/2), by Durbin-Levinson.
std::vector<double> farima_stationary(double d, std::size_t n, Engine& rng);

std::vector<double> simulate_farima(const DgpSpec& spec, Engine& rng);
std::vector<double> simulate_aggregated(const DgpSpec& spec, Engine& rng);
std::vector<double> simulate_renewal(const DgpSpec& spec, Engine& rng);
std::vector<double> simulate_break(const DgpSpec& spec, Engine& rng);

/// Dispatches on the kind using a generator seeded with spec.seed.
std::vector<double> simulate(const DgpSpec& spec);

/// P(Delta = k) = k^-alpha / zeta(alpha), k >= 1.
class DurationSampler {
 public:
  static constexpr std::size_t kTableSize = 1 << 16;

  explicit DurationSampler(double alpha);

  double alpha() const noexcept { return alpha_; }
  /// P(Delta > k).
  double survival(std::size_t k) const;
  std::size_t operator()(Engine& rng) const;
  /// Inverse survival: smallest k with P(Delta > k) <= q, q in (0, 1].
  std::size_t quantile_from_tail(double q) const;

 private:
  double alpha_;
  double zeta_;
  /// survival_[k] = P(Delta > k), k = 0..kTableSize.
  std::vector<double> survival_;
};

}  // namespace lmstat::dgp
