#include "lmstat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lmstat/error.hpp"

namespace lmstat::stats {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct TrigTable {
  std::vector<double> c, s;

  explicit TrigTable(std::size_t n) : c(n), s(n) {
    for (std::size_t m = 0; m < n; ++m) {
      const double arg = kTwoPi * static_cast<double>(m) / static_cast<double>(n);
      c[m] = std::cos(arg);
      s[m] = std::sin(arg);
    }
  }
};

// sum_{k=1}^n cos(k lambda_j) x_k and the sine counterpart.
std::pair<double, double> fourier_sums(std::span<const double> x, std::size_t j, const TrigTable& t) {
  const std::size_t n = x.size();
  CompensatedSum cs, ss;
  std::size_t idx = j % n;  // (k j) mod n at k = 1
  for (std::size_t k = 1; k <= n; ++k) {
    cs.add(t.c[idx] * x[k - 1]);
    ss.add(t.s[idx] * x[k - 1]);
    idx += j;
    if (idx >= n) idx %= n;
  }
  return {cs.value(), ss.value()};
}

double mean_of(std::span<const double> x) {
  CompensatedSum acc;
  for (double v : x) acc.add(v);
  return acc.value() / static_cast<double>(x.size());
}

void check_frequencies(std::size_t n, int s) {
  if (s < 1) throw DomainError("number of frequencies s must be at least 1");
  if (static_cast<std::size_t>(s) > (n - 1) / 2) {
    throw DomainError("s = " + std::to_string(s) + " exceeds (n-1)/2 for n = " + std::to_string(n));
  }
}

}  // namespace

Series::Series(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < kMinLength) {
    throw DomainError("series must have at least " + std::to_string(kMinLength) + " observations, got " +
                      std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("series contains a non-finite value");
  }
}

double periodogram(std::span<const double> x, std::size_t j) {
  const std::size_t n = x.size();
  if (n == 0 || j >= n) throw DomainError("periodogram index out of range");
  const auto [c, s] = fourier_sums(x, j, TrigTable(n));
  return (c * c + s * s) / static_cast<double>(n);
}

double DftVector::frequency(int j) const noexcept { return kTwoPi * j / static_cast<double>(n); }

double DftVector::squared_norm() const noexcept {
  double acc = 0.0;
  for (double v : cos_parts) acc += v * v;
  for (double v : sin_parts) acc += v * v;
  return acc;
}

DftVector dft_vector(std::span<const double> x, int s, double d) {
  const std::size_t n = x.size();
  check_frequencies(n, s);
  DftVector out;
  out.s = s;
  out.d = d;
  out.n = n;
  const double scale = std::pow(static_cast<double>(n), -(0.5 + d));
  const TrigTable table(n);
  for (int j = 1; j <= s; ++j) {
    const auto [c, sn] = fourier_sums(x, static_cast<std::size_t>(j), table);
    out.cos_parts.push_back(scale * c);
    out.sin_parts.push_back(scale * sn);
  }
  return out;
}

double endpoint_contrast(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw DomainError("endpoint contrast of an empty series");
  const auto m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  CompensatedSum acc;
  for (std::size_t i = 0; i < m; ++i) {
    acc.add(x[i]);
    acc.add(-x[n - m + i]);
  }
  return acc.value() / static_cast<double>(m);
}

std::string_view to_string(Variant v) noexcept { return v == Variant::Q ? "q" : "qtilde"; }

Variant parse_variant(std::string_view name) {
  if (name == "q" || name == "Q") return Variant::Q;
  if (name == "qtilde" || name == "Qtilde") return Variant::Qtilde;
  throw ValidationError("unknown statistic variant '" + std::string(name) + "' (expected q or qtilde)");
}

std::string_view to_string(Decision d) noexcept {
  switch (d) {
    case Decision::reject_nonstationarity:
      return "reject-nonstationarity";
    case Decision::fail_to_reject:
      return "fail-to-reject";
    case Decision::reject_two_sided:
      return "reject-two-sided";
  }
  return "unknown";
}

QStatistic q_statistic(std::span<const double> x, int s, Variant variant) {
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("statistic needs at least two observations");
  check_frequencies(n, s);

  // Everything below is location invariant; working on the centred series
  // keeps it so numerically as well.
  const double mean = mean_of(x);
  std::vector<double> centred(n);
  double max_abs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    centred[k] = x[k] - mean;
    max_abs = std::max(max_abs, std::fabs(x[k]));
  }

  CompensatedSum ss, weighted;
  for (std::size_t k = 0; k < n; ++k) {
    const double sq = centred[k] * centred[k];
    ss.add(sq);
    if (variant == Variant::Q) weighted.add(sq / std::log(static_cast<double>(k + 2)));  // log(k+1), k = 1..n
  }
  const double sum_sq = ss.value();
  const double noise_floor = 8.0 * std::numeric_limits<double>::epsilon() * max_abs;
  if (!(sum_sq > static_cast<double>(n) * noise_floor * noise_floor)) {
    throw DegenerateSeries("series has zero sample variance");
  }

  const TrigTable table(n);
  CompensatedSum pg;
  for (int j = 1; j <= s; ++j) {
    const auto [c, sn] = fourier_sums(centred, static_cast<std::size_t>(j), table);
    pg.add((c * c + sn * sn) / static_cast<double>(n));
  }

  QStatistic out;
  const double dn = endpoint_contrast(centred);
  out.dn_term = dn * dn / (sum_sq / static_cast<double>(n));
  if (variant == Variant::Qtilde) {
    out.periodogram_term = std::log(static_cast<double>(n)) * pg.value() / sum_sq;
  } else {
    out.periodogram_term = pg.value() / weighted.value();
  }
  out.statistic = out.dn_term + out.periodogram_term;
  return out;
}

TestOutcome decide(const QStatistic& q, int s, double alpha, Variant variant, double critical_low,
                   std::optional<double> critical_high) {
  TestOutcome out;
  out.variant = variant;
  out.statistic = q.statistic;
  out.s = s;
  out.alpha = alpha;
  out.critical_low = critical_low;
  out.critical_high = critical_high;
  out.dn_term = q.dn_term;
  out.periodogram_term = q.periodogram_term;
  if (critical_high) {
    const bool reject = q.statistic < critical_low || q.statistic > *critical_high;
    out.decision = reject ? Decision::reject_two_sided : Decision::fail_to_reject;
  } else {
    out.decision = q.statistic < critical_low ? Decision::reject_nonstationarity : Decision::fail_to_reject;
  }
  return out;
}

TestOutcome run_test(const Series& x, int s, double alpha, Variant variant, bool two_sided,
                     nulldist::CriticalValues& critical) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const QStatistic q = q_statistic(x.values(), s, variant);
  if (two_sided) {
    return decide(q, s, alpha, variant, critical.quantile(s, alpha / 2.0), critical.quantile(s, 1.0 - alpha / 2.0));
  }
  return decide(q, s, alpha, variant, critical.quantile(s, alpha));
}

}  // namespace lmstat::stats
