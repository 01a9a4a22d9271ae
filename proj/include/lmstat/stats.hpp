#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lmstat/nulldist.hpp"

namespace lmstat::stats {

/// Observed sample X_1..X_n, n >= 16, all values finite.
class Series {
 public:
  static constexpr std::size_t kMinLength = 16;

  explicit Series(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// I_n(lambda_j) = (1/n) |sum_{k=1}^n X_k e^{i k lambda_j}|^2, lambda_j = 2 pi j / n,
/// for 0 <= j <= n-1.
double periodogram(std::span<const double> x, std::size_t j);

/// Normalized DFT at the first s Fourier frequencies:
/// n^{-1/2-d} sum_k cos(k lambda_j) X_k and n^{-1/2-d} sum_k sin(k lambda_j) X_k.
struct DftVector {
  int s = 0;
  double d = 0.0;
  std::size_t n = 0;
  std::vector<double> cos_parts;
  std::vector<double> sin_parts;

  double frequency(int j) const noexcept;
  double squared_norm() const noexcept;
};

DftVector dft_vector(std::span<const double> x, int s, double d);

/// D_n = (1/m)(sum of the first m values - sum of the last m), m = floor(sqrt(n)).
double endpoint_contrast(std::span<const double> x);

enum class Variant { Q, Qtilde };

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view name);

struct QStatistic {
  double statistic = 0.0;
  double dn_term = 0.0;
  double periodogram_term = 0.0;
};

/// Qtilde: D_n^2 / ((1/n) S) + log(n) sum_j I_n(lambda_j) / S
/// Q:      D_n^2 / ((1/n) S) + sum_j I_n(lambda_j) / sum_k (X_k - mean)^2 / log(k + 1)
/// with S = sum_k (X_k - mean)^2. Throws DegenerateSeries when S = 0.
QStatistic q_statistic(std::span<const double> x, int s, Variant variant);

enum class Decision { reject_nonstationarity, fail_to_reject, reject_two_sided };

std::string_view to_string(Decision d) noexcept;

struct TestOutcome {
  Variant variant = Variant::Q;
  double statistic = 0.0;
  int s = 0;
  double alpha = 0.05;
  /// q(alpha, s) one-sided, q(alpha/2, s) two-sided.
  double critical_low = 0.0;
  /// q(1 - alpha/2, s), two-sided only.
  std::optional<double> critical_high;
  Decision decision = Decision::fail_to_reject;
  double dn_term = 0.0;
  double periodogram_term = 0.0;
};

/// Applies the rejection region with strict inequalities.
TestOutcome decide(const QStatistic& q, int s, double alpha, Variant variant, double critical_low,
                   std::optional<double> critical_high = std::nullopt);

TestOutcome run_test(const Series& x, int s, double alpha, Variant variant = Variant::Q, bool two_sided = false,
                     nulldist::CriticalValues& critical = nulldist::default_critical_values());

}  // namespace lmstat::stats
